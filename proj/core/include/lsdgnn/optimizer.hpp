#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsdgnn/param_store.hpp"

namespace lsdgnn {

enum class OptimizerKind { sgd, adam };

OptimizerKind parse_optimizer_kind(const std::string& name);
std::string optimizer_kind_name(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  // Configuration-boundary check (a zero rate is still accepted by step()
  // itself so the identity property stays testable).
  void validate() const;
};

// Applies one update per call, walking the store in insertion order, then
// drops every gradient buffer so a second step without a fresh backward
// pass fails loudly.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  void step(ParameterStore& store);
  std::int64_t steps_taken() const { return steps_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::int64_t steps_ = 0;
  // Adam moment buffers, keyed by parameter name, created on first touch.
  std::unordered_map<std::string, std::vector<double>> first_moment_;
  std::unordered_map<std::string, std::vector<double>> second_moment_;
};

}  // namespace lsdgnn
