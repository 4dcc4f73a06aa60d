#include <gtest/gtest.h>

#include "fedshield/errors.hpp"
#include "fedshield/metrics.hpp"
#include "support.hpp"

namespace fedshield::metrics {
namespace {

ConfusionMatrix matrix(std::size_t k, std::initializer_list<std::initializer_list<int>> rows) {
  ConfusionMatrix cm(k);
  std::size_t t = 0;
  for (const auto& row : rows) {
    std::size_t p = 0;
    for (int n : row) cm.add(t, p++, static_cast<std::uint64_t>(n));
    ++t;
  }
  return cm;
}

TEST(PoisoningPrecision, HandValues) {
  EXPECT_DOUBLE_EQ(poisoning_precision(matrix(2, {{10, 0}, {0, 10}}), 0, 1), 0.0);
  EXPECT_DOUBLE_EQ(poisoning_precision(matrix(2, {{0, 10}, {7, 0}}), 0, 1), 1.0);
  // n(a)=45 correct + 5 to b; n(b)=40 correct + 10 to a.
  EXPECT_DOUBLE_EQ(poisoning_precision(matrix(2, {{45, 5}, {10, 40}}), 0, 1), 0.15);
  // Confusion with a third class does not count.
  EXPECT_DOUBLE_EQ(poisoning_precision(matrix(3, {{8, 0, 2}, {0, 10, 0}, {0, 0, 1}}), 0, 1),
                   0.0);
}

TEST(PoisoningPrecision, UndefinedCases) {
  EXPECT_THROW(poisoning_precision(matrix(2, {{0, 0}, {0, 0}}), 0, 1), UndefinedMetricError);
  EXPECT_THROW(poisoning_precision(matrix(2, {{1, 0}, {0, 1}}), 0, 0), DomainError);
}

TEST(AccuracyReduction, Subtraction) {
  EXPECT_DOUBLE_EQ(accuracy_reduction(0.9, 0.6), 0.9 - 0.6);
  EXPECT_DOUBLE_EQ(accuracy_reduction(0.4, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(accuracy_reduction(0.5, 0.7), 0.5 - 0.7);
}

TEST(ClassAccuracyRate, Bounds) {
  EXPECT_DOUBLE_EQ(class_accuracy_rate(matrix(2, {{90, 10}, {0, 1}}), 0), 0.9);
  EXPECT_DOUBLE_EQ(class_accuracy_rate(matrix(2, {{5, 0}, {0, 1}}), 0), 1.0);
  EXPECT_DOUBLE_EQ(class_accuracy_rate(matrix(2, {{0, 5}, {0, 1}}), 0), 0.0);
  EXPECT_THROW(class_accuracy_rate(matrix(2, {{0, 0}, {0, 1}}), 0), UndefinedMetricError);
}

TEST(DefenseSuccess, DetectedOverPlanted) {
  DefenseOutcome full{20, 0, 50, 0.4, 20};
  EXPECT_DOUBLE_EQ(defense_success(full, CountingMode::kMaliciousOnly), 1.0);
  DefenseOutcome klad{17, 1, 50, 0.4, 20};
  EXPECT_DOUBLE_EQ(defense_success(klad, CountingMode::kMaliciousOnly), 0.85);
  EXPECT_DOUBLE_EQ(defense_success(klad, CountingMode::kTotalRemoved), 0.90);
}

TEST(DefenseSuccess, Validation) {
  DefenseOutcome none{0, 0, 20, 0.0, 0};
  EXPECT_THROW(defense_success(none, CountingMode::kMaliciousOnly), UndefinedMetricError);
  DefenseOutcome wrong_plant{1, 0, 20, 0.4, 7};
  EXPECT_THROW(wrong_plant.validate(), Error);
  DefenseOutcome too_many{9, 0, 20, 0.4, 8};
  EXPECT_THROW(too_many.validate(), Error);
}

TEST(Property, PrecisionInUnitIntervalAndZeroIffNoCrossConfusion) {
  testing::Gen g(31);
  for (int i = 0; i < testing::kPropertyCases; ++i) {
    ConfusionMatrix cm(3);
    for (std::size_t t = 0; t < 3; ++t) {
      for (std::size_t p = 0; p < 3; ++p) cm.add(t, p, testing::uniform_size(g, 0, 4));
    }
    cm.add(0, 0);
    const double pr = poisoning_precision(cm, 0, 1);
    EXPECT_GE(pr, 0.0);
    EXPECT_LE(pr, 1.0);
    EXPECT_EQ(pr == 0.0, cm.at(0, 1) == 0 && cm.at(1, 0) == 0);
  }
}

}  // namespace
}  // namespace fedshield::metrics
