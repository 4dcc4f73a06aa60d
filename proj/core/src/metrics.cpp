#include "fedshield/metrics.hpp"

#include "fedshield/data.hpp"
#include "fedshield/errors.hpp"

namespace fedshield::metrics {

double poisoning_precision(const ConfusionMatrix& cm, std::size_t source,
                           std::size_t target) {
  if (source == target) throw DomainError("poisoning precision needs two classes");
  if (source >= cm.class_count() || target >= cm.class_count()) {
    throw DomainError("class index out of range");
  }
  const double confused =
      static_cast<double>(cm.at(source, target) + cm.at(target, source));
  const double denom = static_cast<double>(cm.at(source, source)) +
                       static_cast<double>(cm.at(target, target)) + confused;
  if (denom == 0.0) {
    throw UndefinedMetricError("poisoning precision: no samples of either class");
  }
  return confused / denom;
}

double accuracy_reduction(double acc_benign, double acc_poisoned) {
  return acc_benign - acc_poisoned;
}

double class_accuracy_rate(const ConfusionMatrix& cm, std::size_t cls) {
  if (cls >= cm.class_count()) throw DomainError("class index out of range");
  const auto total = cm.row_total(cls);
  if (total == 0) {
    throw UndefinedMetricError("class " + std::to_string(cls) +
                               " has no true samples");
  }
  const auto wrong = total - cm.at(cls, cls);
  return static_cast<double>(total - wrong) / static_cast<double>(total);
}

void DefenseOutcome::validate() const {
  if (planted != data::planted_count(gamma, total_clients)) {
    throw DomainError("planted count must equal round(gamma * M)");
  }
  if (removed_malicious > planted) {
    throw DomainError("more malicious clients removed than planted");
  }
  if (planted > total_clients ||
      removed_benign > total_clients - planted) {
    throw DomainError("more benign clients removed than exist");
  }
}

double defense_success(const DefenseOutcome& outcome, CountingMode mode) {
  outcome.validate();
  const auto planted = static_cast<double>(outcome.planted);
  if (planted == 0.0) {
    throw UndefinedMetricError("defense success rate is undefined when gamma * M = 0");
  }
  double removed = static_cast<double>(outcome.removed_malicious);
  if (mode == CountingMode::kTotalRemoved) {
    removed += static_cast<double>(outcome.removed_benign);
  }
  return removed / planted;
}

}  // namespace fedshield::metrics
