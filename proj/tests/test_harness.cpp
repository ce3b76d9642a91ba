#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lsdgnn/checkpoint.hpp"
#include "lsdgnn/trainer.hpp"
#include "support/temp_dir.hpp"

using namespace lsdgnn;
using lsdgnn::testing::TempDir;

namespace {

// Independent per-class precision/recall reimplementation.
struct NaiveReport {
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<double> per_class_f1;
};

NaiveReport naive_metrics(const std::vector<int>& labels,
                          const std::vector<int>& predictions,
                          std::size_t num_classes) {
  NaiveReport report;
  report.per_class_f1.resize(num_classes, 0.0);
  std::size_t hits = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool truth = labels[i] == int(c);
      const bool guess = predictions[i] == int(c);
      if (truth) support += 1;
      if (truth && guess) tp += 1;
      if (!truth && guess) fp += 1;
      if (truth && !guess) fn += 1;
    }
    double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    double f1 = precision + recall > 0
                    ? 2 * precision * recall / (precision + recall)
                    : 0.0;
    report.per_class_f1[c] = f1;
    report.weighted_f1 += support * f1;
    report.macro_f1 += f1 / double(num_classes);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == predictions[i]) ++hits;
  }
  report.weighted_f1 /= labels.empty() ? 1.0 : double(labels.size());
  report.accuracy = labels.empty() ? 0.0 : double(hits) / double(labels.size());
  return report;
}

DatasetManifest small_data(std::size_t conversations = 6,
                           std::uint64_t seed = 3,
                           std::size_t num_classes = 3,
                           std::size_t text_width = 4) {
  SynthConfig config;
  config.num_conversations = conversations;
  config.speakers = {2, 2};
  config.utterances = {4, 6};
  config.shift_probability = 0.3;
  config.separation = 4.0;
  config.noise_std = 1.0;
  config.num_classes = num_classes;
  config.modality_dims = {text_width, 0, 0};
  config.seed = seed;
  return generate_synthetic(config);
}

RunConfig base_config() {
  RunConfig config;
  config.model.num_layers = 2;
  config.model.hidden_dim = 8;
  config.model.omega_long = Omega::bounded(3);
  config.model.dropout = 0.0;
  config.model.lambda_reg = 0.1;
  config.model.num_classes = 3;
  config.model.modality_dims = {4, 0, 0};
  config.optimizer.kind = OptimizerKind::adam;
  config.optimizer.learning_rate = 0.005;
  config.curriculum.enabled = true;
  config.curriculum.num_buckets = 2;
  config.epochs = 5;
  config.batch_size = 2;
  config.seed = 7;
  return config;
}

}  // namespace

TEST_CASE("metric fixtures") {
  SUBCASE("perfect predictions") {
    EvalReport report = compute_metrics({0, 1, 2, 1}, {0, 1, 2, 1}, 3);
    CHECK(report.weighted_f1 == doctest::Approx(1.0));
    CHECK(report.macro_f1 == doctest::Approx(1.0));
    CHECK(report.accuracy == doctest::Approx(1.0));
    CHECK(report.total == 4);
  }
  SUBCASE("one miss splits precision and recall") {
    EvalReport report = compute_metrics({0, 0, 1}, {0, 1, 1}, 2);
    CHECK(report.per_class_f1[0] == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(report.per_class_f1[1] == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(report.weighted_f1 == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(report.macro_f1 == doctest::Approx(2.0 / 3).epsilon(1e-9));
    CHECK(report.accuracy == doctest::Approx(2.0 / 3).epsilon(1e-9));
  }
  SUBCASE("zero-support classes count zero into the macro mean only") {
    EvalReport report = compute_metrics({1, 1, 1}, {1, 1, 1}, 3);
    CHECK(report.weighted_f1 == doctest::Approx(1.0));
    CHECK(report.macro_f1 == doctest::Approx(1.0 / 3));
    CHECK(report.per_class_f1 == std::vector<double>{0.0, 1.0, 0.0});
  }
  SUBCASE("symmetric confusion equates weighted f1 and accuracy") {
    EvalReport report = compute_metrics({0, 0, 1, 1}, {0, 1, 1, 0}, 2);
    CHECK(report.weighted_f1 == doctest::Approx(report.accuracy));
    CHECK(report.accuracy == doctest::Approx(0.5));
  }
  SUBCASE("input contracts") {
    CHECK_THROWS_AS(compute_metrics({0, 1}, {0}, 2), ContractError);
    CHECK_THROWS_AS(compute_metrics({}, {}, 0), ContractError);
    CHECK_THROWS_WITH_AS(compute_metrics({2}, {0}, 2),
                         doctest::Contains("label 2"), IndexError);
    CHECK_THROWS_WITH_AS(compute_metrics({0}, {5}, 2),
                         doctest::Contains("prediction 5"), IndexError);
  }
  SUBCASE("report text is canonical") {
    EvalReport a = compute_metrics({0, 1}, {0, 1}, 2);
    EvalReport b = compute_metrics({0, 1}, {0, 1}, 2);
    CHECK(a.text() == b.text());
    CHECK(a.text().find("weighted_f1=") != std::string::npos);
    CHECK(a.text().find("confusion") != std::string::npos);
  }
}

TEST_CASE("metrics agree with a naive reimplementation") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng() % 5;
    const std::size_t n = 1 + rng() % 60;
    std::vector<int> labels(n), predictions(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = int(rng() % k);
      predictions[i] = int(rng() % k);
    }
    EvalReport report = compute_metrics(labels, predictions, k);
    NaiveReport expected = naive_metrics(labels, predictions, k);
    CHECK(report.weighted_f1 == doctest::Approx(expected.weighted_f1).epsilon(1e-12));
    CHECK(report.macro_f1 == doctest::Approx(expected.macro_f1).epsilon(1e-12));
    CHECK(report.accuracy == doctest::Approx(expected.accuracy).epsilon(1e-12));
    for (std::size_t c = 0; c < k; ++c) {
      CHECK(report.per_class_f1[c] ==
            doctest::Approx(expected.per_class_f1[c]).epsilon(1e-12));
    }

    // Confusion rows sum to each class's support; the diagonal is accuracy.
    REQUIRE(report.confusion.size() == k);
    std::size_t trace = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t row_sum = 0;
      for (std::size_t p = 0; p < k; ++p) row_sum += report.confusion[c][p];
      std::size_t support = std::size_t(
          std::count(labels.begin(), labels.end(), int(c)));
      CHECK(row_sum == support);
      trace += report.confusion[c][c];
    }
    CHECK(double(trace) / double(n) == doctest::Approx(report.accuracy));
  }
}

TEST_CASE("run config serialization is strict") {
  SUBCASE("defaults survive a round trip") {
    RunConfig config = base_config();
    config.paths.dataset = "d.jsonl";
    config.paths.wheel = "w.json";
    config.paths.checkpoint_out = "ck.json";
    std::string text = serialize_run_config(config);
    RunConfig reparsed = parse_run_config(text);
    CHECK(serialize_run_config(reparsed) == text);
    CHECK(reparsed.model.hidden_dim == 8);
    CHECK(reparsed.model.omega_long == Omega::bounded(3));
    CHECK(reparsed.optimizer.kind == OptimizerKind::adam);
    CHECK(reparsed.curriculum.num_buckets == 2);
    CHECK(reparsed.paths.wheel == "w.json");
  }
  SUBCASE("omitted keys fall back to defaults") {
    // Feature widths have no usable default, so they are the only required key.
    CHECK_THROWS_WITH_AS(parse_run_config("{}"),
                         doctest::Contains("all modality widths are zero"),
                         ConfigError);
    RunConfig config =
        parse_run_config("{\"model\": {\"modality_dims\": {\"text\": 4}}}");
    CHECK(config.model.num_layers == 4);
    CHECK(config.model.hidden_dim == 16);
    CHECK(config.model.omega_long == Omega::bounded(5));
    CHECK(config.model.modality_dims.text == 4);
    CHECK(config.curriculum.enabled);
    CHECK(config.curriculum.num_buckets == 5);
    CHECK(config.epochs == 10);
  }
  SUBCASE("unbounded omega round trips through text") {
    RunConfig config = parse_run_config(
        "{\"model\": {\"omega_long\": \"unbounded\","
        " \"modality_dims\": {\"text\": 2}}}");
    CHECK(config.model.omega_long.is_unbounded());
    RunConfig reparsed = parse_run_config(serialize_run_config(config));
    CHECK(reparsed.model.omega_long.is_unbounded());
  }
  SUBCASE("unknown keys anywhere are named") {
    CHECK_THROWS_WITH_AS(parse_run_config("{\"epoch\": 3}"),
                         doctest::Contains("unknown key 'epoch'"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_run_config("{\"model\": {\"depth\": 3}}"),
                         doctest::Contains("unknown key 'model.depth'"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_run_config("{\"optimizer\": {\"momentum\": 0.9}}"),
        doctest::Contains("optimizer.momentum"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_run_config("{\"curriculum\": {\"buckets\": 5}}"),
        doctest::Contains("curriculum.buckets"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_run_config("{\"paths\": {\"output\": \"x\"}}"),
        doctest::Contains("paths.output"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse_run_config(
            "{\"model\": {\"modality_dims\": {\"taste\": 1}}}"),
        doctest::Contains("taste"), ConfigError);
  }
  SUBCASE("validation bounds") {
    CHECK_THROWS_AS(parse_run_config("{\"epochs\": 0}"), ConfigError);
    CHECK_THROWS_AS(parse_run_config("{\"batch_size\": 0}"), ConfigError);
    CHECK_THROWS_AS(
        parse_run_config("{\"curriculum\": {\"num_buckets\": 0}}"),
        ConfigError);
    CHECK_THROWS_AS(
        parse_run_config("{\"curriculum\": {\"epochs_per_bucket\": 0}}"),
        ConfigError);
    CHECK_THROWS_AS(parse_run_config("{\"model\": {\"omega_long\": 1}}"),
                    ConfigError);
    CHECK_THROWS_AS(
        parse_run_config("{\"optimizer\": {\"kind\": \"rmsprop\"}}"),
        ConfigError);
    CHECK_THROWS_AS(parse_run_config("not json"), ParseError);
    CHECK_THROWS_AS(parse_run_config("[]"), FormatError);
    CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ParseError);
  }
}

TEST_CASE("checkpoint serialization") {
  std::mt19937_64 rng(31);
  RunConfig config = base_config();
  LSDGNNParams params = LSDGNNParams::init(config.model, rng);
  Checkpoint checkpoint;
  checkpoint.config = config;
  checkpoint.parameters = params.store;
  std::ostringstream rng_text;
  rng_text << rng;
  checkpoint.rng_state = rng_text.str();
  checkpoint.epoch = 4;

  SUBCASE("byte-stable round trip") {
    std::string text = serialize_checkpoint(checkpoint);
    Checkpoint reparsed = parse_checkpoint(text);
    CHECK(serialize_checkpoint(reparsed) == text);
    CHECK(reparsed.format_version == kCheckpointFormatVersion);
    CHECK(reparsed.epoch == 4);
    CHECK(reparsed.rng_state == checkpoint.rng_state);
    CHECK(serialize_run_config(reparsed.config) ==
          serialize_run_config(config));
    REQUIRE(reparsed.parameters.size() == params.store.size());
    for (const auto& [name, tensor] : params.store) {
      Tensor loaded = reparsed.parameters.get(name);
      CHECK(loaded.shape() == tensor.shape());
      CHECK(loaded.data() == tensor.data());
    }
  }
  SUBCASE("file round trip") {
    TempDir dir;
    save_checkpoint(checkpoint, dir.file("ck.json"));
    Checkpoint loaded = load_checkpoint(dir.file("ck.json"));
    CHECK(serialize_checkpoint(loaded) == serialize_checkpoint(checkpoint));
    CHECK_THROWS_AS(load_checkpoint(dir.file("missing.json")), ParseError);
  }
  SUBCASE("future versions are refused") {
    std::string text = serialize_checkpoint(checkpoint);
    const std::string needle = "\"format_version\":1";
    auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, needle.size(), "\"format_version\":7");
    CHECK_THROWS_WITH_AS(parse_checkpoint(text), doctest::Contains("7"),
                         VersionError);
  }
  SUBCASE("malformed inputs") {
    CHECK_THROWS_AS(parse_checkpoint("not json"), ParseError);
    CHECK_THROWS_AS(parse_checkpoint("{}"), FormatError);
    CHECK_THROWS_AS(parse_checkpoint("[1, 2]"), FormatError);
    std::string text = serialize_checkpoint(checkpoint);
    CHECK_THROWS_AS(parse_checkpoint(text.substr(0, text.size() / 2)),
                    ParseError);
  }
}

TEST_CASE("training is deterministic under its seed") {
  DatasetManifest data = small_data();
  RunConfig config = base_config();

  TrainResult a = train(config, data);
  TrainResult b = train(config, data);
  CHECK(a.log_text() == b.log_text());
  CHECK(serialize_checkpoint(a.checkpoint) == serialize_checkpoint(b.checkpoint));

  RunConfig other = config;
  other.seed = 8;
  TrainResult c = train(other, data);
  CHECK(a.log_text() != c.log_text());

  SUBCASE("epoch log shape") {
    REQUIRE(a.epochs.size() == config.epochs);
    CHECK(a.epochs.front().epoch == 1);
    CHECK(a.epochs.back().epoch == config.epochs);
    CHECK(a.epochs.front().line().rfind("epoch=1 conversations=", 0) == 0);
    CHECK(a.epochs.front().line().find(" mean_loss=") != std::string::npos);
    CHECK(a.log_text().find("final accuracy=") != std::string::npos);
    CHECK(a.checkpoint.epoch == config.epochs);
    CHECK_FALSE(a.checkpoint.rng_state.empty());
  }
}

TEST_CASE("curriculum ramp is visible in the epoch logs") {
  DatasetManifest data = small_data();
  RunConfig config = base_config();
  config.curriculum.num_buckets = 2;

  TrainResult result = train(config, data);
  // Six conversations in two buckets of three: epoch 1 sees only the easy
  // half, epoch 2 onward sees everything.
  CHECK(result.epochs[0].conversations == 3);
  CHECK(result.epochs[0].conversations < data.conversations.size());
  for (std::size_t e = 1; e < result.epochs.size(); ++e) {
    CHECK(result.epochs[e].conversations == 6);
  }

  SUBCASE("disabled curriculum equals a single bucket") {
    RunConfig disabled = config;
    disabled.curriculum.enabled = false;
    RunConfig one_bucket = config;
    one_bucket.curriculum.num_buckets = 1;
    CHECK(train(disabled, data).log_text() ==
          train(one_bucket, data).log_text());
  }
  SUBCASE("more buckets than conversations") {
    RunConfig oversized = config;
    oversized.curriculum.num_buckets = 10;
    CHECK_THROWS_AS(train(oversized, data), ConfigError);
  }
}

TEST_CASE("training loss trends downward on a fixed conversation set") {
  DatasetManifest data = small_data();
  RunConfig config = base_config();
  config.curriculum.enabled = false;
  config.epochs = 40;

  TrainResult result = train(config, data);
  std::size_t non_increasing = 0;
  for (std::size_t e = 1; e < result.epochs.size(); ++e) {
    if (result.epochs[e].mean_loss <=
        result.epochs[e - 1].mean_loss * (1.0 + 1e-6)) {
      ++non_increasing;
    }
  }
  CHECK(double(non_increasing) / double(result.epochs.size() - 1) >= 0.9);
  CHECK(result.epochs.back().mean_loss < result.epochs.front().mean_loss);
}

TEST_CASE("evaluation") {
  DatasetManifest data = small_data(50, 41);
  RunConfig config = base_config();

  SUBCASE("random initialization yields a coherent report") {
    std::mt19937_64 rng(config.seed);
    LSDGNNParams params = LSDGNNParams::init(config.model, rng);
    EvalReport report = evaluate_params(params, data);
    CHECK(report.total == data.num_utterances());
    REQUIRE(report.per_class_f1.size() == 3);
    // Untrained weights cannot be anywhere near perfect on 250+ utterances.
    CHECK(report.accuracy < 0.9);
    std::size_t counted = 0;
    for (const auto& row : report.confusion) {
      for (std::size_t cell : row) counted += cell;
    }
    CHECK(counted == report.total);
  }
  SUBCASE("report follows the checkpoint through disk") {
    TempDir dir;
    DatasetManifest train_data = small_data();
    RunConfig run = config;
    run.paths.checkpoint_out = dir.file("ck.json");
    TrainResult result = train(run, train_data);
    REQUIRE(std::filesystem::exists(run.paths.checkpoint_out));
    Checkpoint loaded = load_checkpoint(run.paths.checkpoint_out);
    CHECK(serialize_checkpoint(loaded) ==
          serialize_checkpoint(result.checkpoint));
    CHECK(evaluate(loaded, train_data).text() ==
          evaluate(result.checkpoint, train_data).text());
    CHECK(evaluate(result.checkpoint, train_data).text() ==
          result.final_train_report.text());
  }
  SUBCASE("class count must match the dataset") {
    DatasetManifest two_class = small_data(6, 5, 2);
    std::mt19937_64 rng(1);
    Checkpoint checkpoint;
    checkpoint.config = config;
    checkpoint.parameters = LSDGNNParams::init(config.model, rng).store;
    CHECK_THROWS_WITH_AS(evaluate(checkpoint, two_class),
                         doctest::Contains("num_classes"), ConfigError);
    CHECK_THROWS_AS(train(config, two_class), ConfigError);
  }
  SUBCASE("modality widths must match the dataset") {
    DatasetManifest wide = small_data(6, 5, 3, 5);
    std::mt19937_64 rng(1);
    Checkpoint checkpoint;
    checkpoint.config = config;
    checkpoint.parameters = LSDGNNParams::init(config.model, rng).store;
    CHECK_THROWS_WITH_AS(evaluate(checkpoint, wide),
                         doctest::Contains("modality_dims"), ConfigError);
    CHECK_THROWS_AS(train(config, wide), ConfigError);
  }
}

TEST_CASE("dev-set tracking") {
  DatasetManifest data = small_data();
  DatasetManifest dev = small_data(4, 19);
  RunConfig config = base_config();

  TrainResult result = train(config, data, &dev);
  for (const EpochLog& log : result.epochs) {
    CHECK(log.has_dev);
    CHECK(log.line().find("dev_accuracy=") != std::string::npos);
    CHECK(log.line().find("dev_weighted_f1=") != std::string::npos);
  }
  CHECK(result.best_dev_epoch >= 1);
  CHECK(result.best_dev_epoch <= config.epochs);
  CHECK(result.log_text().find("best_dev_epoch=") != std::string::npos);

  TrainResult without = train(config, data);
  CHECK(without.best_dev_epoch == 0);
  CHECK(without.log_text().find("best_dev_epoch") == std::string::npos);
}

TEST_CASE("training reads its inputs from the configured paths") {
  TempDir dir;
  DatasetManifest data = small_data();
  save_dataset(data, dir.file("data.jsonl"));
  RunConfig config = base_config();
  config.paths.dataset = dir.file("data.jsonl");

  TrainResult from_path = train(config);
  TrainResult direct = train(config, data);
  CHECK(from_path.log_text() == direct.log_text());

  SUBCASE("an explicit wheel file matching the defaults changes nothing") {
    save_wheel(EmotionWheel::default_for(data.emotion_labels),
               dir.file("wheel.json"));
    RunConfig with_wheel = config;
    with_wheel.paths.wheel = dir.file("wheel.json");
    CHECK(train(with_wheel).log_text() == direct.log_text());
  }
  SUBCASE("missing dataset path") {
    RunConfig broken = config;
    broken.paths.dataset = dir.file("absent.jsonl");
    CHECK_THROWS_AS(train(broken), ParseError);
    RunConfig empty = config;
    empty.paths.dataset = "";
    CHECK_THROWS_AS(train(empty), ConfigError);
  }
}

TEST_CASE("diverging runs abort with a diagnostic") {
  DatasetManifest data = small_data();
  RunConfig config = base_config();
  config.optimizer.kind = OptimizerKind::sgd;
  config.optimizer.learning_rate = 1e30;

  CHECK_THROWS_WITH_AS(train(config, data),
                       doctest::Contains("training aborted at epoch"),
                       TrainingError);
}

TEST_CASE("channel distance measure") {
  DatasetManifest data = small_data();
  RunConfig config = base_config();
  std::mt19937_64 rng(config.seed);
  LSDGNNParams params = LSDGNNParams::init(config.model, rng);

  double distance = mean_channel_distance(params, data);
  CHECK(distance > 0.0);
  CHECK(std::isfinite(distance));
  CHECK(mean_channel_distance(params, data) == distance);

  DatasetManifest empty = data;
  empty.conversations.clear();
  CHECK_THROWS_AS(mean_channel_distance(params, empty), ContractError);
}
