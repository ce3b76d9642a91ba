#include <benchmark/benchmark.h>

#include <random>

#include "lsdgnn/curriculum.hpp"
#include "lsdgnn/dag.hpp"
#include "lsdgnn/dataset.hpp"
#include "lsdgnn/model.hpp"
#include "lsdgnn/optimizer.hpp"

namespace {

using namespace lsdgnn;

DatasetManifest bench_dataset(std::size_t conversations,
                              std::size_t min_utts, std::size_t max_utts) {
  SynthConfig config;
  config.num_conversations = conversations;
  config.utterances = {min_utts, max_utts};
  config.modality_dims = {16, 8, 8};
  config.seed = 42;
  return generate_synthetic(config);
}

ModelConfig bench_model(const DatasetManifest& manifest) {
  ModelConfig config;
  config.num_layers = 2;
  config.hidden_dim = 16;
  config.omega_long = Omega::bounded(3);
  config.dropout = 0.0;
  config.num_classes = manifest.emotion_labels.size();
  config.modality_dims = manifest.modality_dims;
  return config;
}

void bm_build_dag(benchmark::State& state) {
  DatasetManifest manifest =
      bench_dataset(4, std::size_t(state.range(0)), std::size_t(state.range(0)));
  const Conversation& conversation = manifest.conversations[0];
  Omega omega = Omega::bounded(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_dag(conversation, omega));
  }
}
BENCHMARK(bm_build_dag)->Arg(10)->Arg(40)->Arg(160);

void bm_layer_forward(benchmark::State& state) {
  DatasetManifest manifest =
      bench_dataset(1, std::size_t(state.range(0)), std::size_t(state.range(0)));
  ModelConfig config = bench_model(manifest);
  std::mt19937_64 rng(1);
  LSDGNNParams params = LSDGNNParams::init(config, rng);
  const Conversation& conversation = manifest.conversations[0];
  ConversationDAG dag = build_dag(conversation, config.omega_long);
  NoGradGuard guard;
  std::vector<Tensor> rows;
  rows.reserve(conversation.size());
  for (const Utterance& utterance : conversation.utterances) {
    rows.push_back(encode_modalities(utterance, params));
  }
  Tensor states = concat(rows, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dag_layer_forward(states, dag, params.long_layers[0]));
  }
}
BENCHMARK(bm_layer_forward)->Arg(10)->Arg(40);

void bm_train_step(benchmark::State& state) {
  DatasetManifest manifest = bench_dataset(1, 8, 8);
  ModelConfig config = bench_model(manifest);
  std::mt19937_64 rng(1);
  LSDGNNParams params = LSDGNNParams::init(config, rng);
  OptimizerConfig opt_config;
  opt_config.kind = OptimizerKind::adam;
  opt_config.learning_rate = 1e-3;
  Optimizer optimizer(opt_config);
  const Conversation& conversation = manifest.conversations[0];
  std::vector<std::vector<int>> labels{conversation_labels(conversation)};
  for (auto _ : state) {
    std::vector<ModelOutput> outputs{
        model_forward(conversation, params, ForwardMode::train, &rng)};
    Tensor loss = batch_total_loss(outputs, labels, config.lambda_reg);
    backward(loss);
    params.store.ensure_grad_buffers();
    optimizer.step(params.store);
  }
}
BENCHMARK(bm_train_step);

void bm_difficulty(benchmark::State& state) {
  DatasetManifest manifest =
      bench_dataset(1, std::size_t(state.range(0)), std::size_t(state.range(0)));
  EmotionWheel wheel = resolve_wheel(manifest);
  DifficultyParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(conversation_difficulty(
        manifest.conversations[0], manifest.emotion_labels, wheel, params));
  }
}
BENCHMARK(bm_difficulty)->Arg(10)->Arg(160);

}  // namespace

BENCHMARK_MAIN();
