#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lsdgnn/param_store.hpp"

namespace lsdgnn {

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;  // elements probed
  std::size_t flagged = 0;  // elements over tolerance
  double max_rel_err = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  std::size_t checked_total = 0;
  std::size_t flagged_total = 0;
  double tolerance = 0.0;

  bool ok() const { return flagged_total == 0; }
  std::string text() const;  // one line per parameter plus a summary line
};

// Compares tape gradients of loss_fn() against central finite differences.
//
// loss_fn must rebuild the loss from the store's current values on every
// call and be deterministic; the checker probes this with two no-grad
// evaluations and throws CheckError on a bitwise mismatch. epsilon must lie
// in [1e-7, 1e-3]. samples_per_tensor == 0 probes every element; a positive
// value probes a seeded random subsample of at least that many elements
// (whole tensor when smaller). Relative error uses the symmetric
// denominator max(|analytic|, |numeric|, 1e-8); deviations below the
// finite-difference rounding noise floor, ulp-scale noise of the loss
// divided by epsilon, count as exact agreement.
GradCheckReport finite_difference_check(
    const std::function<Tensor()>& loss_fn, ParameterStore& store,
    double epsilon, double tolerance, std::size_t samples_per_tensor = 0,
    std::uint64_t sample_seed = 0);

}  // namespace lsdgnn
