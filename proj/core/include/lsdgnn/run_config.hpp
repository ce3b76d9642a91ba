#pragma once

#include <cstdint>
#include <string>

#include "lsdgnn/model.hpp"
#include "lsdgnn/optimizer.hpp"

namespace lsdgnn {

struct CurriculumConfig {
  bool enabled = true;
  std::size_t num_buckets = 5;
  double k = 1.0;
  double b = 0.4;
  std::size_t epochs_per_bucket = 1;

  void validate() const;
};

struct PathsConfig {
  std::string dataset;
  std::string wheel;           // optional; empty = manifest or defaults
  std::string checkpoint_out;  // optional; empty = no file written
};

struct RunConfig {
  ModelConfig model;
  OptimizerConfig optimizer;
  CurriculumConfig curriculum;
  std::size_t epochs = 10;
  std::size_t batch_size = 1;
  std::uint64_t seed = 1;
  PathsConfig paths;

  void validate() const;
};

// Strict parse: unknown keys anywhere are errors, known keys are optional
// and fall back to the defaults above.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& config);

}  // namespace lsdgnn
