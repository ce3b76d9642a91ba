#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lsdgnn {

struct EvalReport {
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::vector<double> per_class_f1;                  // size K
  std::vector<std::vector<std::size_t>> confusion;   // K x K, rows = true
  std::size_t total = 0;

  // Canonical text rendering; identical reports render identically.
  std::string text() const;
};

// Support-weighted and unweighted means of per-class F1 plus exact-match
// accuracy. Classes with zero support contribute F1 = 0 to the macro mean.
EvalReport compute_metrics(const std::vector<int>& labels,
                           const std::vector<int>& predictions,
                           std::size_t num_classes);

}  // namespace lsdgnn
