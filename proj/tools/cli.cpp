#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsdgnn/curriculum.hpp"
#include "lsdgnn/dag.hpp"
#include "lsdgnn/dataset.hpp"
#include "lsdgnn/format.hpp"
#include "lsdgnn/gradcheck.hpp"
#include "lsdgnn/trainer.hpp"

namespace lsdgnn::cli {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ParseError("cannot write '" + path + "'");
  }
  out << text;
}

void run_build_graph(const std::string& omega_text, const std::string& input,
                     const std::string& output) {
  Omega omega = Omega::parse(omega_text);
  DatasetManifest manifest = load_dataset(input);
  std::string text;
  for (const Conversation& conversation : manifest.conversations) {
    text += "# conversation " + conversation.id + "\n";
    text += format_edge_list(build_dag(conversation, omega));
  }
  spill(output, text);
}

void run_difficulty(double k, double b, const std::string& wheel_path,
                    const std::string& input, std::ostream& out) {
  DatasetManifest manifest = load_dataset(input);
  EmotionWheel wheel =
      wheel_path.empty() ? resolve_wheel(manifest) : load_wheel(wheel_path);
  out << difficulty_report(manifest, wheel, DifficultyParams{k, b});
}

void run_synth(const std::string& config_path, bool seed_given,
               std::uint64_t seed, const std::string& output) {
  SynthConfig config = parse_synth_config(slurp(config_path));
  if (seed_given) {
    config.seed = seed;
  }
  save_dataset(generate_synthetic(config), output);
}

void run_train(const std::string& config_path,
               const std::vector<std::uint64_t>& seeds, std::ostream& out) {
  RunConfig config = load_run_config(config_path);
  if (seeds.empty()) {
    out << train(config).log_text();
    return;
  }
  double acc = 0.0, wf1 = 0.0, mf1 = 0.0;
  for (std::uint64_t seed : seeds) {
    RunConfig run = config;
    run.seed = seed;
    if (!run.paths.checkpoint_out.empty()) {
      run.paths.checkpoint_out += ".seed" + std::to_string(seed);
    }
    const EvalReport& report = train(run).final_train_report;
    out << "seed=" << seed << " accuracy=" << format_double(report.accuracy)
        << " weighted_f1=" << format_double(report.weighted_f1)
        << " macro_f1=" << format_double(report.macro_f1) << "\n";
    acc += report.accuracy;
    wf1 += report.weighted_f1;
    mf1 += report.macro_f1;
  }
  double n = double(seeds.size());
  out << "mean accuracy=" << format_double(acc / n)
      << " weighted_f1=" << format_double(wf1 / n)
      << " macro_f1=" << format_double(mf1 / n) << "\n";
}

void run_eval(const std::string& checkpoint_path, const std::string& data_path,
              std::ostream& out) {
  Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  DatasetManifest manifest = load_dataset(data_path);
  out << evaluate(checkpoint, manifest).text();
}

void run_gradcheck(const std::string& config_path, double epsilon,
                   double tolerance, std::size_t samples, std::ostream& out) {
  RunConfig config = load_run_config(config_path);
  config.validate();
  if (config.paths.dataset.empty()) {
    throw ConfigError("config: paths.dataset is required to gradcheck");
  }
  DatasetManifest manifest = load_dataset(config.paths.dataset);
  if (config.model.num_classes != manifest.emotion_labels.size()) {
    throw ConfigError("config: model.num_classes does not match the dataset");
  }
  std::mt19937_64 init_rng(config.seed);
  LSDGNNParams params = LSDGNNParams::init(config.model, init_rng);
  std::size_t batch =
      std::min<std::size_t>(config.batch_size, manifest.conversations.size());
  // Reseeding per evaluation pins the dropout masks, so the probed loss is
  // one fixed differentiable function of the parameters.
  auto loss_fn = [&]() {
    std::mt19937_64 rng(config.seed);
    std::vector<ModelOutput> outputs;
    std::vector<std::vector<int>> labels;
    for (std::size_t i = 0; i < batch; ++i) {
      const Conversation& conversation = manifest.conversations[i];
      outputs.push_back(
          model_forward(conversation, params, ForwardMode::train, &rng));
      labels.push_back(conversation_labels(conversation));
    }
    return batch_total_loss(outputs, labels, config.model.lambda_reg);
  };
  GradCheckReport report = finite_difference_check(
      loss_fn, params.store, epsilon, tolerance, samples, config.seed);
  out << report.text();
  if (!report.ok()) {
    throw CheckError("gradient check failed: max relative error " +
                     format_double(report.max_rel_err) + " over tolerance " +
                     format_double(tolerance));
  }
}

}  // namespace

int cli_main(std::vector<std::string> args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Long-short distance conversation graph trainer"};
  app.require_subcommand(1);

  auto* build_graph = app.add_subcommand(
      "build-graph", "Write per-conversation DAG edge lists");
  std::string omega_text, input, output;
  build_graph->add_option("--omega", omega_text,
                          "Same-speaker lookback bound or 'unbounded'")
      ->required();
  build_graph->add_option("--input", input, "Dataset file")->required();
  build_graph->add_option("--output", output, "Edge list file")->required();

  auto* difficulty = app.add_subcommand(
      "difficulty", "Score conversation difficulty, easiest first");
  double k = 1.0, b = 0.4;
  std::string wheel_path, diff_input;
  difficulty->add_option("--k", k, "Shift weight slope");
  difficulty->add_option("--b", b, "Shift weight bias");
  difficulty->add_option("--wheel", wheel_path, "Emotion wheel file");
  difficulty->add_option("--input", diff_input, "Dataset file")->required();

  auto* synth =
      app.add_subcommand("synth", "Generate a synthetic conversation dataset");
  std::string synth_config, synth_output;
  std::uint64_t synth_seed = 0;
  synth->add_option("--config", synth_config, "Generator config file")
      ->required();
  auto* seed_opt =
      synth->add_option("--seed", synth_seed, "Override the config seed");
  synth->add_option("--output", synth_output, "Dataset file to write")
      ->required();

  auto* train_cmd = app.add_subcommand("train", "Train from a run config");
  std::string train_config;
  std::vector<std::uint64_t> seeds;
  train_cmd->add_option("--config", train_config, "Run config file")
      ->required();
  train_cmd
      ->add_option("--seeds", seeds,
                   "Run once per seed and report per-seed and mean metrics")
      ->delimiter(',');

  auto* eval_cmd =
      app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string eval_checkpoint, eval_data;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--data", eval_data, "Dataset file")->required();

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Compare tape gradients against finite differences");
  std::string gradcheck_config;
  double epsilon = 1e-5, tolerance = 1e-3;
  std::size_t samples = 16;
  gradcheck->add_option("--config", gradcheck_config, "Run config file")
      ->required();
  gradcheck->add_option("--epsilon", epsilon, "Finite difference step");
  gradcheck->add_option("--tolerance", tolerance, "Relative error bound");
  gradcheck->add_option("--samples", samples,
                        "Elements probed per tensor, 0 for all");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
    if (build_graph->parsed()) {
      run_build_graph(omega_text, input, output);
    } else if (difficulty->parsed()) {
      run_difficulty(k, b, wheel_path, diff_input, out);
    } else if (synth->parsed()) {
      run_synth(synth_config, seed_opt->count() > 0, synth_seed, synth_output);
    } else if (train_cmd->parsed()) {
      run_train(train_config, seeds, out);
    } else if (eval_cmd->parsed()) {
      run_eval(eval_checkpoint, eval_data, out);
    } else if (gradcheck->parsed()) {
      run_gradcheck(gradcheck_config, epsilon, tolerance, samples, out);
    }
    return 0;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace lsdgnn::cli
