#include <gtest/gtest.h>

#include <cmath>

#include "fedshield/data.hpp"
#include "fedshield/errors.hpp"
#include "fedshield/nn.hpp"
#include "support.hpp"

namespace fedshield::nn {
namespace {

using testing::Gen;

std::vector<std::size_t> dims(std::initializer_list<std::size_t> d) { return d; }

TEST(Init, ParameterCountForMnistShape) {
  const auto m = init_model(dims({784, 32, 10}), 1);
  EXPECT_EQ(m.parameter_count(), 784u * 32 + 32 + 32 * 10 + 10);
  EXPECT_EQ(m.parameter_count(), 25450u);
  EXPECT_EQ(m.input_dim(), 784u);
  EXPECT_EQ(m.class_count(), 10u);
}

TEST(Init, DeterministicZeroBiasesWithinHeBound) {
  const auto a = init_model(dims({4, 3}), 7);
  const auto b = init_model(dims({4, 3}), 7);
  EXPECT_EQ(flatten(a).values, flatten(b).values);
  EXPECT_TRUE(a.layers[0].biases.isZero());
  const double limit = std::sqrt(6.0 / 4.0);
  EXPECT_LE(a.layers[0].weights.cwiseAbs().maxCoeff(), limit);
  EXPECT_NE(flatten(init_model(dims({4, 3}), 8)).values, flatten(a).values);
}

TEST(Init, RejectsDegenerateShapes) {
  EXPECT_THROW(init_model(dims({4}), 1), DomainError);
  EXPECT_THROW(init_model(dims({4, 0, 2}), 1), DomainError);
}

TEST(Flatten, LayerMajorLayout) {
  const auto m = init_model(dims({2, 2}), 3);
  const auto p = flatten(m);
  ASSERT_EQ(p.values.size(), 6u);
  EXPECT_EQ(p.values[1], m.layers[0].weights(0, 1));
  EXPECT_EQ(p.values[2], m.layers[0].weights(1, 0));
  EXPECT_EQ(p.layer_offsets, (std::vector<std::size_t>{0, 6}));
}

TEST(Flatten, OffsetsPartitionVectorAndRoundTrip) {
  const auto m = init_model(dims({5, 4, 3, 2}), 3);
  const auto p = flatten(m);
  ASSERT_EQ(p.layer_count(), 3u);
  EXPECT_EQ(p.layer_offsets.front(), 0u);
  EXPECT_EQ(p.layer_offsets.back(), p.values.size());
  std::size_t covered = 0;
  for (std::size_t t = 0; t < p.layer_count(); ++t) covered += p.layer(t).size();
  EXPECT_EQ(covered, m.parameter_count());
  EXPECT_EQ(flatten(unflatten(m, p.values)).values, p.values);
  std::vector<double> short_vec(p.values.size() - 1);
  EXPECT_THROW(unflatten(m, short_vec), ShapeError);
}

TEST(Gradient, MatchesCentralDifferences) {
  Gen g(4);
  const auto data = testing::random_dataset(g, 8, 4, 3);
  const auto model = init_model(dims({4, 5, 3}), 9);
  const auto analytic = loss_gradient(model, data);
  const auto params = flatten(model).values;
  ASSERT_EQ(analytic.size(), params.size());
  const double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto plus = params, minus = params;
    plus[i] += h;
    minus[i] -= h;
    const double numeric = (mean_loss(unflatten(model, plus), data) -
                            mean_loss(unflatten(model, minus), data)) /
                           (2 * h);
    const double scale = std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-8});
    EXPECT_LT(std::fabs(numeric - analytic[i]) / scale, 1e-4) << "coordinate " << i;
  }
}

TEST(Train, ZeroEpochsIsNoOp) {
  Gen g(5);
  const auto data = testing::random_dataset(g, 16, 3, 2);
  const auto model = init_model(dims({3, 2}), 1);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.batch_size = 4;
  EXPECT_EQ(flatten(train(model, data, cfg)).values, flatten(model).values);
}

TEST(Train, SeparableBlobsReachHighAccuracy) {
  const auto data = data::synth_blobs(2, 100, 2, 0.5, 21);
  const auto model = init_model(dims({2, 8, 2}), 3);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.05;
  cfg.seed = 2;
  std::vector<double> losses;
  const auto trained = train(model, data, cfg, &losses);
  EXPECT_GE(evaluate(trained, data).accuracy(), 0.95);
  ASSERT_EQ(losses.size(), 50u);
  EXPECT_LT(losses.back(), losses.front());
}

TEST(Train, Deterministic) {
  const auto data = data::synth_blobs(3, 30, 2, 1.0, 4);
  const auto model = init_model(dims({2, 4, 3}), 3);
  TrainConfig cfg;
  cfg.batch_size = 8;
  cfg.seed = 11;
  EXPECT_EQ(flatten(train(model, data, cfg)).values,
            flatten(train(model, data, cfg)).values);
}

TEST(Train, DivergenceIsReported) {
  Gen g(6);
  auto data = testing::random_dataset(g, 40, 2, 2);
  data.features *= 1e300;
  const auto model = init_model(dims({2, 2}), 1);
  TrainConfig cfg;
  cfg.learning_rate = 9.0;
  cfg.batch_size = 4;
  EXPECT_THROW(train(model, data, cfg), DivergenceError);
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.learning_rate = 0.1;
  cfg.batch_size = 64;
  EXPECT_THROW(cfg.validate(10), ConfigError);
  EXPECT_NO_THROW(cfg.validate(64));
}

TEST(Evaluate, ConfusionTotalsAndPerfectDiagonal) {
  data::Dataset d;
  d.features.resize(2, 2);
  d.features << 5, -5, -5, 5;
  d.labels = {0, 1};
  d.class_count = 2;
  Mlp m;
  Layer l;
  l.weights = Matrix::Identity(2, 2);
  l.biases = Vector::Zero(2);
  m.layers.push_back(l);
  const auto cm = evaluate(m, d);
  EXPECT_EQ(cm.total(), 2u);
  EXPECT_EQ(cm.trace(), 2u);
  EXPECT_DOUBLE_EQ(cm.accuracy(), 1.0);
}

TEST(Predict, TiesGoToLowerIndex) {
  Mlp m;
  Layer l;
  l.weights = Matrix::Zero(3, 2);
  l.biases = Vector::Zero(3);
  m.layers.push_back(l);
  data::FeatureMatrix x(1, 2);
  x << 1.0, 2.0;
  EXPECT_EQ(predict(m, x), (std::vector<std::uint32_t>{0}));
  const auto p = predict_proba(m, x);
  EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(Property, ProbabilitiesFormDistribution) {
  Gen g(77);
  for (int i = 0; i < testing::kPropertyCases / 4; ++i) {
    const std::size_t in = testing::uniform_size(g, 1, 6);
    const std::size_t out = testing::uniform_size(g, 2, 5);
    const auto model = init_model(dims({in, testing::uniform_size(g, 1, 8), out}), g());
    const auto d = testing::random_dataset(g, 10, in, out);
    const auto p = predict_proba(model, d.features * 10.0);
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-12);
      EXPECT_GE(p.row(r).minCoeff(), 0.0);
    }
    EXPECT_EQ(evaluate(model, d).total(), d.size());
  }
}

}  // namespace
}  // namespace fedshield::nn
