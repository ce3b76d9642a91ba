#include "lsdgnn/metrics.hpp"

#include <sstream>

#include "lsdgnn/errors.hpp"
#include "lsdgnn/format.hpp"

namespace lsdgnn {

EvalReport compute_metrics(const std::vector<int>& labels,
                           const std::vector<int>& predictions,
                           std::size_t num_classes) {
  if (labels.size() != predictions.size()) {
    throw ContractError("metrics: " + std::to_string(labels.size()) +
                        " labels vs " + std::to_string(predictions.size()) +
                        " predictions");
  }
  if (num_classes < 1) {
    throw ContractError("metrics: need at least one class");
  }
  EvalReport report;
  report.total = labels.size();
  report.confusion.assign(num_classes,
                          std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int truth = labels[i];
    const int guess = predictions[i];
    if (truth < 0 || static_cast<std::size_t>(truth) >= num_classes) {
      throw IndexError("metrics: label " + std::to_string(truth) +
                       " out of range at position " + std::to_string(i));
    }
    if (guess < 0 || static_cast<std::size_t>(guess) >= num_classes) {
      throw IndexError("metrics: prediction " + std::to_string(guess) +
                       " out of range at position " + std::to_string(i));
    }
    ++report.confusion[static_cast<std::size_t>(truth)]
                      [static_cast<std::size_t>(guess)];
  }

  std::size_t correct = 0;
  double weighted_sum = 0.0;
  double macro_sum = 0.0;
  report.per_class_f1.assign(num_classes, 0.0);
  for (std::size_t k = 0; k < num_classes; ++k) {
    const std::size_t true_positive = report.confusion[k][k];
    correct += true_positive;
    std::size_t support = 0;    // row sum
    std::size_t predicted = 0;  // column sum
    for (std::size_t j = 0; j < num_classes; ++j) {
      support += report.confusion[k][j];
      predicted += report.confusion[j][k];
    }
    double f1 = 0.0;
    // F1 = 2 tp / (support + predicted); zero whenever the class never
    // appears on either side.
    if (support + predicted > 0) {
      f1 = 2.0 * static_cast<double>(true_positive) /
           static_cast<double>(support + predicted);
    }
    report.per_class_f1[k] = f1;
    weighted_sum += f1 * static_cast<double>(support);
    macro_sum += f1;
  }
  report.accuracy = report.total == 0
                        ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(report.total);
  report.weighted_f1 = report.total == 0
                           ? 0.0
                           : weighted_sum / static_cast<double>(report.total);
  report.macro_f1 = macro_sum / static_cast<double>(num_classes);
  return report;
}

std::string EvalReport::text() const {
  std::ostringstream os;
  os << "weighted_f1=" << format_double(weighted_f1)
     << " macro_f1=" << format_double(macro_f1)
     << " accuracy=" << format_double(accuracy) << " total=" << total << '\n';
  for (std::size_t k = 0; k < per_class_f1.size(); ++k) {
    os << "class " << k << " f1=" << format_double(per_class_f1[k]) << '\n';
  }
  os << "confusion";
  for (const auto& row : confusion) {
    os << '\n';
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) os << ' ';
      os << row[j];
    }
  }
  os << '\n';
  return os.str();
}

}  // namespace lsdgnn
