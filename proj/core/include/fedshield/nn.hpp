#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedshield/data.hpp"

namespace fedshield::nn {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

struct Layer {
  Matrix weights;  // out x in
  Vector biases;   // out
};

// Fully connected network; ReLU on hidden layers, softmax on the output.
struct Mlp {
  std::vector<Layer> layers;

  std::size_t layer_count() const noexcept { return layers.size(); }
  std::size_t class_count() const;
  std::size_t input_dim() const;
  std::size_t parameter_count() const;
  std::vector<std::size_t> dims() const;
};

bool same_architecture(const Mlp& a, const Mlp& b);

// Flat parameter vector. Layer t occupies [layer_offsets[t],
// layer_offsets[t+1]): weights row-major, then biases.
struct ModelParams {
  std::vector<double> values;
  std::vector<std::size_t> layer_offsets;

  std::size_t layer_count() const noexcept {
    return layer_offsets.empty() ? 0 : layer_offsets.size() - 1;
  }
  std::span<const double> layer(std::size_t t) const;
};

ModelParams flatten(const Mlp& model);
// Throws ShapeError when params does not match the template's size.
Mlp unflatten(const Mlp& shape_template, std::span<const double> params);

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;

  // Throws ConfigError; dataset_size = 0 skips the batch-size check.
  void validate(std::size_t dataset_size = 0) const;
};

// Per-class counts indexed (true class, predicted class).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t class_count);

  std::size_t class_count() const noexcept { return classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);

  std::uint64_t row_total(std::size_t truth) const;
  std::uint64_t total() const;
  std::uint64_t trace() const;
  // trace / total; 0 for an empty matrix.
  double accuracy() const;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

// Weights uniform in +-sqrt(6 / fan_in), zero biases.
Mlp init_model(std::span<const std::size_t> layer_dims, std::uint64_t seed);

// Seeded mini-batch SGD on mean cross-entropy. Returns the trained copy; if
// `epoch_loss` is given it receives the full-data loss after every epoch.
Mlp train(const Mlp& model, const data::Dataset& data, const TrainConfig& cfg,
          std::vector<double>* epoch_loss = nullptr);

// Row i holds the class probabilities of sample i.
Matrix predict_proba(const Mlp& model, const data::FeatureMatrix& features);
// Argmax with ties going to the lower class index.
std::vector<std::uint32_t> predict(const Mlp& model,
                                   const data::FeatureMatrix& features);

ConfusionMatrix evaluate(const Mlp& model, const data::Dataset& data);

double mean_loss(const Mlp& model, const data::Dataset& data);

// Gradient of the mean cross-entropy over `data`, in flatten() layout.
std::vector<double> loss_gradient(const Mlp& model, const data::Dataset& data,
                                  double* loss = nullptr);

}  // namespace fedshield::nn
