#include "lsdgnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lsdgnn/curriculum.hpp"
#include "lsdgnn/format.hpp"
#include "lsdgnn/optimizer.hpp"

namespace lsdgnn {

namespace {

void check_config_matches_dataset(const RunConfig& config,
                                  const DatasetManifest& manifest) {
  if (config.model.num_classes != manifest.emotion_labels.size()) {
    throw ConfigError("config: model.num_classes is " +
                      std::to_string(config.model.num_classes) +
                      " but the dataset defines " +
                      std::to_string(manifest.emotion_labels.size()) +
                      " emotion labels");
  }
  if (!(config.model.modality_dims == manifest.modality_dims)) {
    throw ConfigError(
        "config: model.modality_dims (" +
        std::to_string(config.model.modality_dims.text) + ", " +
        std::to_string(config.model.modality_dims.audio) + ", " +
        std::to_string(config.model.modality_dims.visual) +
        ") do not match the dataset (" +
        std::to_string(manifest.modality_dims.text) + ", " +
        std::to_string(manifest.modality_dims.audio) + ", " +
        std::to_string(manifest.modality_dims.visual) + ")");
  }
}

CurriculumSchedule make_schedule(const RunConfig& config,
                                 const DatasetManifest& manifest) {
  if (!config.curriculum.enabled) {
    return trivial_schedule(manifest);
  }
  EmotionWheel wheel = config.paths.wheel.empty()
                           ? resolve_wheel(manifest)
                           : load_wheel(config.paths.wheel);
  DifficultyParams params{config.curriculum.k, config.curriculum.b};
  return build_schedule(manifest, wheel, params, config.curriculum.num_buckets);
}

}  // namespace

std::string EpochLog::line() const {
  std::string out = "epoch=" + std::to_string(epoch) +
                    " conversations=" + std::to_string(conversations) +
                    " utterances=" + std::to_string(utterances) +
                    " loss=" + format_double(total_loss) +
                    " mean_loss=" + format_double(mean_loss);
  if (has_dev) {
    out += " dev_accuracy=" + format_double(dev_accuracy) +
           " dev_weighted_f1=" + format_double(dev_weighted_f1);
  }
  return out;
}

std::string TrainResult::log_text() const {
  std::string out;
  for (const EpochLog& log : epochs) {
    out += log.line();
    out += '\n';
  }
  out += "final accuracy=" + format_double(final_train_report.accuracy) +
         " weighted_f1=" + format_double(final_train_report.weighted_f1) +
         " macro_f1=" + format_double(final_train_report.macro_f1);
  if (best_dev_epoch != 0) {
    out += " best_dev_epoch=" + std::to_string(best_dev_epoch);
  }
  out += '\n';
  return out;
}

TrainResult train(const RunConfig& config, const DatasetManifest& manifest,
                  const DatasetManifest* dev) {
  config.validate();
  validate_manifest(manifest);
  check_config_matches_dataset(config, manifest);
  if (dev != nullptr) {
    validate_manifest(*dev);
    check_config_matches_dataset(config, *dev);
  }

  CurriculumSchedule schedule = make_schedule(config, manifest);
  std::vector<std::vector<std::string>> plan = curriculum_epoch_plan(
      schedule, config.epochs, config.curriculum.epochs_per_bucket,
      config.seed);

  std::mt19937_64 rng(config.seed);
  LSDGNNParams params = LSDGNNParams::init(config.model, rng);
  Optimizer optimizer(config.optimizer);

  TrainResult result;
  double best_dev_f1 = -1.0;
  for (std::size_t e = 1; e <= config.epochs; ++e) {
    const std::vector<std::string>& ids = plan[e - 1];
    EpochLog log;
    log.epoch = e;
    log.conversations = ids.size();
    for (std::size_t start = 0, step = 1; start < ids.size();
         start += config.batch_size, ++step) {
      std::size_t stop = std::min(start + config.batch_size, ids.size());
      try {
        std::vector<ModelOutput> outputs;
        std::vector<std::vector<int>> labels;
        for (std::size_t i = start; i < stop; ++i) {
          const Conversation& conversation = manifest.by_id(ids[i]);
          outputs.push_back(model_forward(conversation, params,
                                          ForwardMode::train, &rng));
          labels.push_back(conversation_labels(conversation));
          log.utterances += conversation.size();
        }
        Tensor loss =
            batch_total_loss(outputs, labels, config.model.lambda_reg);
        log.total_loss += loss.value();
        backward(loss);
      } catch (const NumericError& e_inner) {
        throw TrainingError("training aborted at epoch " + std::to_string(e) +
                            ", step " + std::to_string(step) + ": " +
                            e_inner.what());
      }
      params.store.ensure_grad_buffers();
      optimizer.step(params.store);
    }
    log.mean_loss =
        log.utterances == 0 ? 0.0 : log.total_loss / double(log.utterances);
    if (dev != nullptr) {
      EvalReport report = evaluate_params(params, *dev);
      log.has_dev = true;
      log.dev_accuracy = report.accuracy;
      log.dev_weighted_f1 = report.weighted_f1;
      if (report.weighted_f1 > best_dev_f1) {
        best_dev_f1 = report.weighted_f1;
        result.best_dev_epoch = e;
      }
    }
    result.epochs.push_back(log);
  }

  result.final_train_report = evaluate_params(params, manifest);

  result.checkpoint.format_version = kCheckpointFormatVersion;
  result.checkpoint.config = config;
  result.checkpoint.epoch = config.epochs;
  for (const auto& [name, tensor] : params.store) {
    result.checkpoint.parameters.add(name, tensor.clone_detached());
  }
  std::ostringstream rng_stream;
  rng_stream << rng;
  result.checkpoint.rng_state = rng_stream.str();

  if (!config.paths.checkpoint_out.empty()) {
    save_checkpoint(result.checkpoint, config.paths.checkpoint_out);
  }
  return result;
}

TrainResult train(const RunConfig& config) {
  if (config.paths.dataset.empty()) {
    throw ConfigError("config: paths.dataset is required to train");
  }
  DatasetManifest manifest = load_dataset(config.paths.dataset);
  return train(config, manifest);
}

EvalReport evaluate_params(const LSDGNNParams& params,
                           const DatasetManifest& manifest) {
  std::vector<int> labels;
  std::vector<int> predictions;
  for (const Conversation& conversation : manifest.conversations) {
    ModelOutput output = model_forward(conversation, params, ForwardMode::eval);
    std::vector<int> truth = conversation_labels(conversation);
    labels.insert(labels.end(), truth.begin(), truth.end());
    predictions.insert(predictions.end(), output.predictions.begin(),
                       output.predictions.end());
  }
  return compute_metrics(labels, predictions, params.config.num_classes);
}

EvalReport evaluate(const Checkpoint& checkpoint,
                    const DatasetManifest& manifest) {
  validate_manifest(manifest);
  check_config_matches_dataset(checkpoint.config, manifest);
  LSDGNNParams params = LSDGNNParams::from_store(checkpoint.config.model,
                                                 checkpoint.parameters);
  return evaluate_params(params, manifest);
}

double mean_channel_distance(const LSDGNNParams& params,
                             const DatasetManifest& manifest) {
  NoGradGuard guard;
  double sum = 0.0;
  std::size_t count = 0;
  for (const Conversation& conversation : manifest.conversations) {
    ModelOutput output = model_forward(conversation, params, ForwardMode::eval);
    for (std::size_t l = 0; l < output.long_trace.attention.size(); ++l) {
      sum += frobenius_distance(output.short_trace.attention[l],
                                output.long_trace.attention[l])
                 .value();
      ++count;
    }
  }
  if (count == 0) {
    throw ContractError("mean_channel_distance: no attention traces");
  }
  return sum / double(count);
}

}  // namespace lsdgnn
