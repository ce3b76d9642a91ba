#include "lsdgnn/wheel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lsdgnn/format.hpp"

namespace lsdgnn {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kPi = 3.141592653589793238462643383279502884;

WheelPoint on_circle(double degrees) {
  return {std::cos(degrees * kPi / 180.0), std::sin(degrees * kPi / 180.0)};
}

}  // namespace

const std::vector<EmotionWheel::Entry>& EmotionWheel::default_points() {
  // Declared convention, not dataset ground truth: angles in degrees on the
  // standard circumplex, positive valence to the right. Surprise sits on the
  // vertical axis, so its valence is pinned to exactly 0.0; neutral sits at
  // the origin.
  static const std::vector<Entry> table = {
      {"happy", on_circle(20.0)},
      {"joy", on_circle(20.0)},
      {"excited", on_circle(45.0)},
      {"surprise", {0.0, 1.0}},
      {"fear", on_circle(130.0)},
      {"angry", on_circle(135.0)},
      {"frustrated", on_circle(150.0)},
      {"disgust", on_circle(165.0)},
      {"sad", on_circle(200.0)},
      {"neutral", {0.0, 0.0}},
  };
  return table;
}

EmotionWheel EmotionWheel::from_points(std::vector<Entry> points) {
  if (points.empty()) {
    throw DataError("emotion wheel: no points given");
  }
  EmotionWheel wheel;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& [label, point] = points[i];
    if (label.empty()) {
      throw DataError("emotion wheel: empty label");
    }
    if (wheel.index_.count(label)) {
      throw DataError("emotion wheel: duplicate label '" + label + "'");
    }
    if (!std::isfinite(point.valence) || !std::isfinite(point.arousal)) {
      throw DataError("emotion wheel: non-finite point for '" + label + "'");
    }
    const double norm2 =
        point.valence * point.valence + point.arousal * point.arousal;
    const bool at_origin = point.valence == 0.0 && point.arousal == 0.0;
    if (!at_origin && std::fabs(norm2 - 1.0) >= 1e-9) {
      throw DataError("emotion wheel: '" + label +
                      "' is neither the origin nor on the unit circle (|p|^2 = " +
                      format_double(norm2) + ")");
    }
    wheel.index_.emplace(label, i);
  }
  wheel.entries_ = std::move(points);
  return wheel;
}

EmotionWheel EmotionWheel::default_for(const std::vector<std::string>& labels) {
  const auto& table = default_points();
  std::vector<Entry> points;
  points.reserve(labels.size());
  for (const std::string& label : labels) {
    bool found = false;
    for (const Entry& entry : table) {
      if (entry.first == label) {
        points.push_back(entry);
        found = true;
        break;
      }
    }
    if (!found) {
      throw LookupError("emotion wheel: no default coordinates for label '" +
                        label + "'; provide a wheel file");
    }
  }
  return from_points(std::move(points));
}

bool EmotionWheel::has(const std::string& label) const {
  return index_.count(label) != 0;
}

const WheelPoint& EmotionWheel::point(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) {
    throw LookupError("emotion wheel: unknown label '" + label + "'");
  }
  return entries_[it->second].second;
}

double EmotionWheel::similarity(const std::string& a,
                                const std::string& b) const {
  const WheelPoint& pa = point(a);
  const WheelPoint& pb = point(b);
  const double valence_product = pa.valence * pb.valence;
  if (valence_product == 0.0) {
    return 1.0 / static_cast<double>(count());
  }
  if (valence_product < 0.0) {
    return 0.0;
  }
  // Both points are off-origin (nonzero valence), hence on the unit circle.
  const double dot = pa.valence * pb.valence + pa.arousal * pb.arousal;
  const double norm_a = std::sqrt(pa.valence * pa.valence + pa.arousal * pa.arousal);
  const double norm_b = std::sqrt(pb.valence * pb.valence + pb.arousal * pb.arousal);
  const double cosine = dot / (norm_a * norm_b);
  return cosine > 0.0 ? (cosine < 1.0 ? cosine : 1.0) : 0.0;
}

bool EmotionWheel::operator==(const EmotionWheel& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].first != other.entries_[i].first ||
        entries_[i].second.valence != other.entries_[i].second.valence ||
        entries_[i].second.arousal != other.entries_[i].second.arousal) {
      return false;
    }
  }
  return true;
}

EmotionWheel parse_wheel(const std::string& json_text) {
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("wheel: ") + e.what());
  }
  if (!parsed.is_object()) {
    throw FormatError("wheel: top level must be an object of labels");
  }
  std::vector<EmotionWheel::Entry> points;
  for (auto& [label, value] : parsed.items()) {
    if (!value.is_object() || !value.contains("valence") ||
        !value.contains("arousal") || value.size() != 2 ||
        !value["valence"].is_number() || !value["arousal"].is_number()) {
      throw FormatError("wheel: label '" + label +
                        "' must map to {\"valence\": x, \"arousal\": y}");
    }
    points.push_back(
        {label, {value["valence"].get<double>(), value["arousal"].get<double>()}});
  }
  return EmotionWheel::from_points(std::move(points));
}

std::string serialize_wheel(const EmotionWheel& wheel) {
  ordered_json out = ordered_json::object();
  for (const auto& [label, point] : wheel.entries()) {
    out[label] = {{"valence", point.valence}, {"arousal", point.arousal}};
  }
  return out.dump() + "\n";
}

EmotionWheel load_wheel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("wheel: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_wheel(buffer.str());
}

void save_wheel(const EmotionWheel& wheel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("wheel: cannot write '" + path + "'");
  }
  out << serialize_wheel(wheel);
}

}  // namespace lsdgnn
