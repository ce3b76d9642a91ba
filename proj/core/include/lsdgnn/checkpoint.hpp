#pragma once

#include <string>

#include "lsdgnn/param_store.hpp"
#include "lsdgnn/run_config.hpp"

namespace lsdgnn {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  int format_version = kCheckpointFormatVersion;
  RunConfig config;
  ParameterStore parameters;  // values only; gradients are never saved
  std::string rng_state;      // mt19937_64 stream state
  std::size_t epoch = 0;
};

std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace lsdgnn
