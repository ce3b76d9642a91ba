#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lsdgnn/errors.hpp"

namespace lsdgnn {

struct WheelPoint {
  double valence = 0.0;
  double arousal = 0.0;
};

// Valence/arousal embedding of emotion labels. Every point is either on the
// unit circle (within 1e-9) or exactly at the origin; zero valence is stored
// as exactly 0.0 so the similarity case split is reproducible.
class EmotionWheel {
 public:
  using Entry = std::pair<std::string, WheelPoint>;

  static EmotionWheel from_points(std::vector<Entry> points);
  // Subset of the built-in coordinate table covering exactly these labels.
  static EmotionWheel default_for(const std::vector<std::string>& labels);
  static const std::vector<Entry>& default_points();

  std::size_t count() const { return entries_.size(); }  // N of the 1/N case
  bool has(const std::string& label) const;
  const WheelPoint& point(const std::string& label) const;
  const std::vector<Entry>& entries() const { return entries_; }

  // Similarity of two labels:
  //   valence product > 0 -> max(cos angle, 0)
  //   valence product < 0 -> 0
  //   valence product == 0 -> 1 / count()
  double similarity(const std::string& a, const std::string& b) const;

  bool operator==(const EmotionWheel& other) const;

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

EmotionWheel parse_wheel(const std::string& json_text);
std::string serialize_wheel(const EmotionWheel& wheel);
EmotionWheel load_wheel(const std::string& path);
void save_wheel(const EmotionWheel& wheel, const std::string& path);

}  // namespace lsdgnn
