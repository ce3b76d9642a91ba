#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lsdgnn/dataset.hpp"

namespace lsdgnn {

// Slope/bias of the weighted-shift transform.
struct DifficultyParams {
  double k = 1.0;
  double b = 0.4;
};

// Operation-count instrumentation for the linear-pass claim.
struct DifficultyStats {
  std::size_t utterances_visited = 0;
  std::size_t shifts = 0;
};

// k * similarity + b.
double weighted_shift(double similarity, const DifficultyParams& params);

// Scans each speaker's consecutive utterance pairs once; every pair whose
// labels differ contributes weighted_shift of their wheel similarity.
// Returns (sum + distinct speakers) / (utterances + distinct speakers).
double conversation_difficulty(const Conversation& conversation,
                               const std::vector<std::string>& emotion_labels,
                               const EmotionWheel& wheel,
                               const DifficultyParams& params,
                               DifficultyStats* stats = nullptr);

struct CurriculumSchedule {
  // Easiest bucket first; each holds conversation ids in ascending
  // (difficulty, id) order. Sizes differ by at most one, larger first.
  std::vector<std::vector<std::string>> buckets;
  // (id, difficulty) sorted ascending by (difficulty, id).
  std::vector<std::pair<std::string, double>> difficulties;
  std::size_t num_buckets = 1;
};

CurriculumSchedule build_schedule(const DatasetManifest& manifest,
                                  const EmotionWheel& wheel,
                                  const DifficultyParams& params,
                                  std::size_t num_buckets);

// Degenerate single-bucket schedule over all conversations, used when the
// curriculum is switched off; needs no wheel or difficulty scores.
CurriculumSchedule trivial_schedule(const DatasetManifest& manifest);

// Epoch e <= buckets * epochs_per_bucket trains on buckets 1..ceil(e /
// epochs_per_bucket) cumulatively; later epochs train on everything. Each
// epoch's ids are shuffled from a canonical id-sorted order, so two
// schedules with the same member sets yield bitwise-identical plans.
std::vector<std::vector<std::string>> curriculum_epoch_plan(
    const CurriculumSchedule& schedule, std::size_t total_epochs,
    std::size_t epochs_per_bucket, std::uint64_t seed);

// One "conversation_id difficulty" line per conversation, ascending.
std::string difficulty_report(const DatasetManifest& manifest,
                              const EmotionWheel& wheel,
                              const DifficultyParams& params);

}  // namespace lsdgnn
