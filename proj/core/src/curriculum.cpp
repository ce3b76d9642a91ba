#include "lsdgnn/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "lsdgnn/format.hpp"
#include "lsdgnn/shuffle.hpp"

namespace lsdgnn {

double weighted_shift(double similarity, const DifficultyParams& params) {
  return params.k * similarity + params.b;
}

double conversation_difficulty(const Conversation& conversation,
                               const std::vector<std::string>& emotion_labels,
                               const EmotionWheel& wheel,
                               const DifficultyParams& params,
                               DifficultyStats* stats) {
  if (conversation.utterances.empty()) {
    throw DataError("difficulty: conversation '" + conversation.id +
                    "' is empty");
  }
  // Last label seen per speaker; one pass over the utterances covers every
  // consecutive same-speaker pair.
  std::unordered_map<std::string, int> last_label;
  double shift_sum = 0.0;
  std::size_t shifts = 0;
  for (const Utterance& u : conversation.utterances) {
    if (stats) ++stats->utterances_visited;
    if (!u.label.has_value()) {
      throw DataError("difficulty: conversation '" + conversation.id +
                      "' utterance " + std::to_string(u.index) +
                      " has no label");
    }
    const int label = *u.label;
    if (label < 0 || static_cast<std::size_t>(label) >= emotion_labels.size()) {
      throw DataError("difficulty: conversation '" + conversation.id +
                      "' utterance " + std::to_string(u.index) +
                      " label out of range");
    }
    auto it = last_label.find(u.speaker);
    if (it == last_label.end()) {
      last_label.emplace(u.speaker, label);
      continue;
    }
    if (it->second != label) {
      const double similarity = wheel.similarity(emotion_labels[static_cast<
                                                     std::size_t>(it->second)],
                                                 emotion_labels[static_cast<
                                                     std::size_t>(label)]);
      shift_sum += weighted_shift(similarity, params);
      ++shifts;
    }
    it->second = label;
  }
  if (stats) stats->shifts += shifts;
  const double n_speakers = static_cast<double>(last_label.size());
  const double n_utterances = static_cast<double>(conversation.size());
  return (shift_sum + n_speakers) / (n_utterances + n_speakers);
}

namespace {

std::vector<std::vector<std::string>> partition_buckets(
    const std::vector<std::string>& ordered_ids, std::size_t num_buckets) {
  // Near-equal contiguous buckets, the larger ones first.
  const std::size_t n = ordered_ids.size();
  const std::size_t base = n / num_buckets;
  const std::size_t extra = n % num_buckets;
  std::vector<std::vector<std::string>> buckets(num_buckets);
  std::size_t cursor = 0;
  for (std::size_t bucket = 0; bucket < num_buckets; ++bucket) {
    const std::size_t count = base + (bucket < extra ? 1 : 0);
    buckets[bucket].assign(
        ordered_ids.begin() + static_cast<std::ptrdiff_t>(cursor),
        ordered_ids.begin() + static_cast<std::ptrdiff_t>(cursor + count));
    cursor += count;
  }
  return buckets;
}

}  // namespace

CurriculumSchedule build_schedule(const DatasetManifest& manifest,
                                  const EmotionWheel& wheel,
                                  const DifficultyParams& params,
                                  std::size_t num_buckets) {
  const std::size_t n = manifest.conversations.size();
  if (num_buckets < 1) {
    throw ConfigError("schedule: num_buckets must be at least 1");
  }
  if (num_buckets > n) {
    throw ConfigError("schedule: " + std::to_string(num_buckets) +
                      " buckets for " + std::to_string(n) + " conversations");
  }

  CurriculumSchedule schedule;
  schedule.num_buckets = num_buckets;
  schedule.difficulties.reserve(n);
  for (const Conversation& conv : manifest.conversations) {
    schedule.difficulties.emplace_back(
        conv.id, conversation_difficulty(conv, manifest.emotion_labels, wheel,
                                         params));
  }
  std::sort(schedule.difficulties.begin(), schedule.difficulties.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second < b.second;
              return a.first < b.first;
            });

  std::vector<std::string> ordered_ids;
  ordered_ids.reserve(n);
  for (const auto& [id, dif] : schedule.difficulties) ordered_ids.push_back(id);
  schedule.buckets = partition_buckets(ordered_ids, num_buckets);
  return schedule;
}

CurriculumSchedule trivial_schedule(const DatasetManifest& manifest) {
  CurriculumSchedule schedule;
  schedule.num_buckets = 1;
  std::vector<std::string> ids;
  ids.reserve(manifest.conversations.size());
  for (const Conversation& conv : manifest.conversations) {
    ids.push_back(conv.id);
  }
  std::sort(ids.begin(), ids.end());
  schedule.buckets.push_back(std::move(ids));
  return schedule;
}

std::vector<std::vector<std::string>> curriculum_epoch_plan(
    const CurriculumSchedule& schedule, std::size_t total_epochs,
    std::size_t epochs_per_bucket, std::uint64_t seed) {
  if (total_epochs < 1) {
    throw ConfigError("epoch plan: total_epochs must be at least 1");
  }
  if (epochs_per_bucket < 1) {
    throw ConfigError("epoch plan: epochs_per_bucket must be at least 1");
  }
  const std::size_t k = schedule.buckets.size();
  if (k == 0) {
    throw ContractError("epoch plan: schedule has no buckets");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> plan;
  plan.reserve(total_epochs);
  for (std::size_t epoch = 1; epoch <= total_epochs; ++epoch) {
    const std::size_t included =
        std::min(k, (epoch + epochs_per_bucket - 1) / epochs_per_bucket);
    std::vector<std::string> ids;
    for (std::size_t bucket = 0; bucket < included; ++bucket) {
      ids.insert(ids.end(), schedule.buckets[bucket].begin(),
                 schedule.buckets[bucket].end());
    }
    // Canonical pre-shuffle order makes the plan a function of the member
    // set alone, not of bucket boundaries.
    std::sort(ids.begin(), ids.end());
    seeded_shuffle(ids, rng);
    plan.push_back(std::move(ids));
  }
  return plan;
}

std::string difficulty_report(const DatasetManifest& manifest,
                              const EmotionWheel& wheel,
                              const DifficultyParams& params) {
  std::vector<std::pair<std::string, double>> rows;
  rows.reserve(manifest.conversations.size());
  for (const Conversation& conv : manifest.conversations) {
    rows.emplace_back(conv.id,
                      conversation_difficulty(conv, manifest.emotion_labels,
                                              wheel, params));
  }
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  std::ostringstream os;
  for (const auto& [id, dif] : rows) {
    os << id << ' ' << format_double(dif) << '\n';
  }
  return os.str();
}

}  // namespace lsdgnn
