#include "lsdgnn/optimizer.hpp"

#include <cmath>

namespace lsdgnn {

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("optimizer: unknown kind '" + name + "'");
}

std::string optimizer_kind_name(OptimizerKind kind) {
  return kind == OptimizerKind::sgd ? "sgd" : "adam";
}

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("optimizer: learning_rate must be positive, got " +
                      std::to_string(learning_rate));
  }
  if (kind == OptimizerKind::adam) {
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
      throw ConfigError("optimizer: adam betas must lie in (0, 1)");
    }
    if (!(epsilon > 0.0)) {
      throw ConfigError("optimizer: adam epsilon must be positive");
    }
  }
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) {
  if (config_.learning_rate < 0.0 || !std::isfinite(config_.learning_rate)) {
    throw ConfigError("optimizer: learning_rate must be nonnegative");
  }
}

void Optimizer::step(ParameterStore& store) {
  ++steps_;
  const double lr = config_.learning_rate;
  for (auto& [name, tensor] : store) {
    if (!tensor.has_grad()) {
      throw ContractError("optimizer_step: missing gradient for parameter '" +
                          name + "'");
    }
    auto& theta = tensor.data();
    const auto& g = tensor.grad();
    if (config_.kind == OptimizerKind::sgd) {
      for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * g[i];
    } else {
      auto& m = first_moment_[name];
      auto& v = second_moment_[name];
      if (m.size() != theta.size()) m.assign(theta.size(), 0.0);
      if (v.size() != theta.size()) v.assign(theta.size(), 0.0);
      const double b1 = config_.beta1, b2 = config_.beta2;
      const double correction1 =
          1.0 - std::pow(b1, static_cast<double>(steps_));
      const double correction2 =
          1.0 - std::pow(b2, static_cast<double>(steps_));
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        double m_hat = m[i] / correction1;
        double v_hat = v[i] / correction2;
        theta[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }
  store.clear_grads();
}

}  // namespace lsdgnn
