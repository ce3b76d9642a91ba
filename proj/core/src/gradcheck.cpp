#include "lsdgnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>

#include "lsdgnn/format.hpp"

namespace lsdgnn {

namespace {

double eval_loss(const std::function<Tensor()>& loss_fn) {
  NoGradGuard guard;
  Tensor loss = loss_fn();
  if (!loss.is_scalar()) {
    throw ContractError("gradient check: loss function must return a scalar");
  }
  return loss.value();
}

std::vector<std::size_t> pick_indices(std::size_t size, std::size_t samples,
                                      std::mt19937_64& rng) {
  if (samples == 0 || samples >= size) {
    std::vector<std::size_t> all(size);
    for (std::size_t i = 0; i < size; ++i) all[i] = i;
    return all;
  }
  // Partial Fisher-Yates: the first `samples` slots become a uniform draw
  // without replacement.
  std::vector<std::size_t> pool(size);
  for (std::size_t i = 0; i < size; ++i) pool[i] = i;
  for (std::size_t i = 0; i < samples; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, size - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(samples);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

std::string GradCheckReport::text() const {
  std::ostringstream os;
  for (const GradCheckEntry& entry : entries) {
    os << entry.name << " checked=" << entry.checked
       << " flagged=" << entry.flagged
       << " max_rel_err=" << format_double(entry.max_rel_err) << '\n';
  }
  os << (ok() ? "PASS" : "FAIL") << " max_rel_err="
     << format_double(max_rel_err) << " tolerance="
     << format_double(tolerance) << " checked=" << checked_total
     << " flagged=" << flagged_total << '\n';
  return os.str();
}

GradCheckReport finite_difference_check(
    const std::function<Tensor()>& loss_fn, ParameterStore& store,
    double epsilon, double tolerance, std::size_t samples_per_tensor,
    std::uint64_t sample_seed) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw DomainError("gradient check: epsilon " + format_double(epsilon) +
                      " outside [1e-7, 1e-3]");
  }
  if (!(tolerance > 0.0)) {
    throw DomainError("gradient check: tolerance must be positive");
  }

  const double probe_a = eval_loss(loss_fn);
  const double probe_b = eval_loss(loss_fn);
  if (std::memcmp(&probe_a, &probe_b, sizeof(double)) != 0) {
    throw CheckError(
        "gradient check: loss function is not deterministic across calls");
  }

  store.clear_grads();
  Tensor loss = loss_fn();
  if (!loss.is_scalar()) {
    throw ContractError("gradient check: loss function must return a scalar");
  }
  backward(loss);

  // A central difference cannot resolve slopes below the rounding noise of
  // the loss itself, about ulp(|f|) / (2 epsilon); zero-gradient parameters
  // would otherwise be flagged on rounding luck. Deviations under this
  // floor count as agreement.
  const double noise_floor =
      8.0 * std::numeric_limits<double>::epsilon() *
      std::max(1.0, std::fabs(probe_a)) / epsilon;

  std::mt19937_64 rng(sample_seed ^ 0x9e3779b97f4a7c15ULL);
  GradCheckReport report;
  report.tolerance = tolerance;
  for (auto& [name, tensor] : store) {
    GradCheckEntry entry;
    entry.name = name;
    auto& theta = tensor.data();
    const std::vector<std::size_t> indices =
        pick_indices(theta.size(), samples_per_tensor, rng);
    for (std::size_t idx : indices) {
      const double original = theta[idx];
      theta[idx] = original + epsilon;
      const double plus = eval_loss(loss_fn);
      theta[idx] = original - epsilon;
      const double minus = eval_loss(loss_fn);
      theta[idx] = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = tensor.has_grad() ? tensor.grad()[idx] : 0.0;
      const double diff = std::fabs(analytic - numeric);
      const double denom =
          std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      const double rel = diff <= noise_floor ? 0.0 : diff / denom;
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      if (rel > tolerance) ++entry.flagged;
      ++entry.checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.checked_total += entry.checked;
    report.flagged_total += entry.flagged;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace lsdgnn
