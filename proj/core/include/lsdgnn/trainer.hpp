#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lsdgnn/checkpoint.hpp"
#include "lsdgnn/dataset.hpp"
#include "lsdgnn/metrics.hpp"
#include "lsdgnn/model.hpp"
#include "lsdgnn/run_config.hpp"

namespace lsdgnn {

struct EpochLog {
  std::size_t epoch = 0;          // 1-based
  std::size_t conversations = 0;  // conversations trained on this epoch
  std::size_t utterances = 0;
  double total_loss = 0.0;  // sum of step losses over the epoch
  double mean_loss = 0.0;   // total_loss / utterances
  bool has_dev = false;
  double dev_accuracy = 0.0;
  double dev_weighted_f1 = 0.0;

  std::string line() const;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> epochs;
  EvalReport final_train_report;
  std::size_t best_dev_epoch = 0;  // 0 when no dev set was given

  // One line per epoch plus a final-metrics line; deterministic under seed.
  std::string log_text() const;
};

// Runs the full schedule: per epoch, take the conversation ids from the
// curriculum plan (a single-bucket plan when the curriculum is disabled),
// walk them in seeded-shuffled order in batches of batch_size, and apply
// one optimizer step per batch. A non-finite loss aborts with an error
// naming the epoch and step. When dev is given, each epoch logs dev
// metrics and the best dev epoch is tracked by weighted F1. Writes the
// final checkpoint to paths.checkpoint_out when that path is non-empty.
TrainResult train(const RunConfig& config, const DatasetManifest& manifest,
                  const DatasetManifest* dev = nullptr);
// Loads the dataset (and the wheel, when the curriculum needs one) from
// config.paths first.
TrainResult train(const RunConfig& config);

// Evaluation-mode forward over every conversation, metrics over the
// concatenated predictions in manifest order.
EvalReport evaluate_params(const LSDGNNParams& params,
                           const DatasetManifest& manifest);
// Rebuilds the model from the checkpoint, then evaluates; the checkpoint's
// model dimensions must match the dataset.
EvalReport evaluate(const Checkpoint& checkpoint,
                    const DatasetManifest& manifest);

// Mean over conversations and layers of the Frobenius distance between the
// two channels' attention matrices, evaluation mode.
double mean_channel_distance(const LSDGNNParams& params,
                             const DatasetManifest& manifest);

}  // namespace lsdgnn
