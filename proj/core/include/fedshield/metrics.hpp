#pragma once

#include <cstddef>

#include "fedshield/nn.hpp"

namespace fedshield::metrics {

using nn::ConfusionMatrix;

// (n(a->b) + n(b->a)) / (n(a) + n(a->b) + n(b) + n(b->a)), where n(a) is the
// diagonal count of class a. Throws UndefinedMetricError on a zero
// denominator and DomainError for a == b.
double poisoning_precision(const ConfusionMatrix& cm, std::size_t source,
                           std::size_t target);

// Accuracy of the benign global model minus that of the poisoned one.
double accuracy_reduction(double acc_benign, double acc_poisoned);

// Per-class accuracy (row diagonal over row total). Throws
// UndefinedMetricError for a class with no true samples.
double class_accuracy_rate(const ConfusionMatrix& cm, std::size_t cls);

struct DefenseOutcome {
  std::size_t removed_malicious = 0;
  std::size_t removed_benign = 0;
  std::size_t total_clients = 0;
  double gamma = 0.0;
  std::size_t planted = 0;

  // Throws DomainError when the counts are inconsistent.
  void validate() const;
};

enum class CountingMode {
  kMaliciousOnly,  // B / (gamma M)
  kTotalRemoved,   // (B + removed benign) / (gamma M)
};

// Defense success rate J. Throws UndefinedMetricError when gamma M = 0.
double defense_success(const DefenseOutcome& outcome, CountingMode mode);

}  // namespace fedshield::metrics
