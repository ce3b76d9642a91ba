#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace lsdgnn {

struct Utterance {
  std::size_t index = 0;  // 1-based position inside the conversation
  std::string speaker;
  std::optional<int> label;  // emotion class index; absent when unlabeled
  std::vector<double> text_feat;
  std::vector<double> audio_feat;
  std::vector<double> visual_feat;
};

struct Conversation {
  std::string id;
  std::vector<Utterance> utterances;  // indices 1..N contiguous

  std::size_t size() const { return utterances.size(); }
};

}  // namespace lsdgnn
