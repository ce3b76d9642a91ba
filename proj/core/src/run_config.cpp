#include "lsdgnn/run_config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace lsdgnn {

namespace {

using ordered_json = nlohmann::ordered_json;

void reject_unknown(const ordered_json& object,
                    const std::vector<std::string>& known,
                    const std::string& where) {
  for (const auto& item : object.items()) {
    bool ok = false;
    for (const std::string& key : known) {
      if (item.key() == key) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      throw ConfigError("config: unknown key '" + where + item.key() + "'");
    }
  }
}

template <typename T>
void read_count(const ordered_json& object, const char* key, T& field,
                const std::string& where) {
  if (!object.contains(key)) return;
  if (!object[key].is_number_unsigned()) {
    throw ConfigError("config: " + where + key +
                      " must be a nonnegative integer");
  }
  field = object[key].get<T>();
}

void read_number(const ordered_json& object, const char* key, double& field,
                 const std::string& where) {
  if (!object.contains(key)) return;
  if (!object[key].is_number()) {
    throw ConfigError("config: " + where + key + " must be a number");
  }
  field = object[key].get<double>();
}

void read_flag(const ordered_json& object, const char* key, bool& field,
               const std::string& where) {
  if (!object.contains(key)) return;
  if (!object[key].is_boolean()) {
    throw ConfigError("config: " + where + key + " must be a boolean");
  }
  field = object[key].get<bool>();
}

void read_string(const ordered_json& object, const char* key,
                 std::string& field, const std::string& where) {
  if (!object.contains(key)) return;
  if (!object[key].is_string()) {
    throw ConfigError("config: " + where + key + " must be a string");
  }
  field = object[key].get<std::string>();
}

ModelConfig parse_model(const ordered_json& object) {
  ModelConfig model;
  reject_unknown(object,
                 {"num_layers", "hidden_dim", "omega_long", "dropout",
                  "lambda_reg", "num_classes", "modality_dims", "epsilon_reg",
                  "reg_cap", "biaffine_feeds_next_layer"},
                 "model.");
  read_count(object, "num_layers", model.num_layers, "model.");
  read_count(object, "hidden_dim", model.hidden_dim, "model.");
  if (object.contains("omega_long")) {
    const ordered_json& omega = object["omega_long"];
    if (omega.is_number_unsigned()) {
      model.omega_long = Omega::bounded(omega.get<std::size_t>());
    } else if (omega.is_string()) {
      model.omega_long = Omega::parse(omega.get<std::string>());
    } else {
      throw ConfigError(
          "config: model.omega_long must be an integer or \"unbounded\"");
    }
  }
  read_number(object, "dropout", model.dropout, "model.");
  read_number(object, "lambda_reg", model.lambda_reg, "model.");
  read_count(object, "num_classes", model.num_classes, "model.");
  if (object.contains("modality_dims")) {
    const ordered_json& dims = object["modality_dims"];
    reject_unknown(dims, {"text", "audio", "visual"}, "model.modality_dims.");
    read_count(dims, "text", model.modality_dims.text,
               "model.modality_dims.");
    read_count(dims, "audio", model.modality_dims.audio,
               "model.modality_dims.");
    read_count(dims, "visual", model.modality_dims.visual,
               "model.modality_dims.");
  }
  read_number(object, "epsilon_reg", model.epsilon_reg, "model.");
  read_number(object, "reg_cap", model.reg_cap, "model.");
  read_flag(object, "biaffine_feeds_next_layer",
            model.biaffine_feeds_next_layer, "model.");
  return model;
}

OptimizerConfig parse_optimizer(const ordered_json& object) {
  OptimizerConfig optimizer;
  reject_unknown(object,
                 {"kind", "learning_rate", "beta1", "beta2", "epsilon"},
                 "optimizer.");
  if (object.contains("kind")) {
    if (!object["kind"].is_string()) {
      throw ConfigError("config: optimizer.kind must be a string");
    }
    optimizer.kind = parse_optimizer_kind(object["kind"].get<std::string>());
  }
  read_number(object, "learning_rate", optimizer.learning_rate, "optimizer.");
  read_number(object, "beta1", optimizer.beta1, "optimizer.");
  read_number(object, "beta2", optimizer.beta2, "optimizer.");
  read_number(object, "epsilon", optimizer.epsilon, "optimizer.");
  return optimizer;
}

CurriculumConfig parse_curriculum(const ordered_json& object) {
  CurriculumConfig curriculum;
  reject_unknown(object,
                 {"enabled", "num_buckets", "k", "b", "epochs_per_bucket"},
                 "curriculum.");
  read_flag(object, "enabled", curriculum.enabled, "curriculum.");
  read_count(object, "num_buckets", curriculum.num_buckets, "curriculum.");
  read_number(object, "k", curriculum.k, "curriculum.");
  read_number(object, "b", curriculum.b, "curriculum.");
  read_count(object, "epochs_per_bucket", curriculum.epochs_per_bucket,
             "curriculum.");
  return curriculum;
}

}  // namespace

void CurriculumConfig::validate() const {
  if (num_buckets < 1) {
    throw ConfigError("config: curriculum.num_buckets must be at least 1");
  }
  if (epochs_per_bucket < 1) {
    throw ConfigError(
        "config: curriculum.epochs_per_bucket must be at least 1");
  }
  if (!std::isfinite(k) || !std::isfinite(b)) {
    throw ConfigError("config: curriculum k and b must be finite");
  }
}

void RunConfig::validate() const {
  model.validate();
  optimizer.validate();
  curriculum.validate();
  if (epochs < 1) {
    throw ConfigError("config: epochs must be at least 1");
  }
  if (batch_size < 1) {
    throw ConfigError("config: batch_size must be at least 1");
  }
}

RunConfig parse_run_config(const std::string& json_text) {
  ordered_json parsed;
  try {
    parsed = ordered_json::parse(json_text);
  } catch (const ordered_json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!parsed.is_object()) {
    throw FormatError("config: top level must be an object");
  }
  reject_unknown(parsed,
                 {"model", "optimizer", "curriculum", "epochs", "batch_size",
                  "seed", "paths"},
                 "");
  RunConfig config;
  if (parsed.contains("model")) config.model = parse_model(parsed["model"]);
  if (parsed.contains("optimizer")) {
    config.optimizer = parse_optimizer(parsed["optimizer"]);
  }
  if (parsed.contains("curriculum")) {
    config.curriculum = parse_curriculum(parsed["curriculum"]);
  }
  read_count(parsed, "epochs", config.epochs, "");
  read_count(parsed, "batch_size", config.batch_size, "");
  read_count(parsed, "seed", config.seed, "");
  if (parsed.contains("paths")) {
    const ordered_json& paths = parsed["paths"];
    reject_unknown(paths, {"dataset", "wheel", "checkpoint_out"}, "paths.");
    read_string(paths, "dataset", config.paths.dataset, "paths.");
    read_string(paths, "wheel", config.paths.wheel, "paths.");
    read_string(paths, "checkpoint_out", config.paths.checkpoint_out,
                "paths.");
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("config: cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

std::string serialize_run_config(const RunConfig& config) {
  ordered_json out;
  ordered_json model;
  model["num_layers"] = config.model.num_layers;
  model["hidden_dim"] = config.model.hidden_dim;
  if (config.model.omega_long.is_unbounded()) {
    model["omega_long"] = "unbounded";
  } else {
    model["omega_long"] = config.model.omega_long.value();
  }
  model["dropout"] = config.model.dropout;
  model["lambda_reg"] = config.model.lambda_reg;
  model["num_classes"] = config.model.num_classes;
  model["modality_dims"] = {{"text", config.model.modality_dims.text},
                            {"audio", config.model.modality_dims.audio},
                            {"visual", config.model.modality_dims.visual}};
  model["epsilon_reg"] = config.model.epsilon_reg;
  model["reg_cap"] = config.model.reg_cap;
  model["biaffine_feeds_next_layer"] = config.model.biaffine_feeds_next_layer;
  out["model"] = std::move(model);

  ordered_json optimizer;
  optimizer["kind"] = optimizer_kind_name(config.optimizer.kind);
  optimizer["learning_rate"] = config.optimizer.learning_rate;
  optimizer["beta1"] = config.optimizer.beta1;
  optimizer["beta2"] = config.optimizer.beta2;
  optimizer["epsilon"] = config.optimizer.epsilon;
  out["optimizer"] = std::move(optimizer);

  ordered_json curriculum;
  curriculum["enabled"] = config.curriculum.enabled;
  curriculum["num_buckets"] = config.curriculum.num_buckets;
  curriculum["k"] = config.curriculum.k;
  curriculum["b"] = config.curriculum.b;
  curriculum["epochs_per_bucket"] = config.curriculum.epochs_per_bucket;
  out["curriculum"] = std::move(curriculum);

  out["epochs"] = config.epochs;
  out["batch_size"] = config.batch_size;
  out["seed"] = config.seed;
  out["paths"] = {{"dataset", config.paths.dataset},
                  {"wheel", config.paths.wheel},
                  {"checkpoint_out", config.paths.checkpoint_out}};
  return out.dump();
}

}  // namespace lsdgnn
