#include "fedshield/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "fedshield/errors.hpp"
#include "fedshield/random.hpp"

namespace fedshield::nn {

std::size_t Mlp::class_count() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weights.rows());
}

std::size_t Mlp::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weights.cols());
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) {
    n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  }
  return n;
}

std::vector<std::size_t> Mlp::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(input_dim());
  for (const auto& l : layers) d.push_back(static_cast<std::size_t>(l.weights.rows()));
  return d;
}

bool same_architecture(const Mlp& a, const Mlp& b) { return a.dims() == b.dims(); }

std::span<const double> ModelParams::layer(std::size_t t) const {
  return std::span<const double>(values).subspan(
      layer_offsets[t], layer_offsets[t + 1] - layer_offsets[t]);
}

ModelParams flatten(const Mlp& model) {
  ModelParams out;
  out.values.reserve(model.parameter_count());
  out.layer_offsets.push_back(0);
  for (const auto& l : model.layers) {
    out.values.insert(out.values.end(), l.weights.data(),
                      l.weights.data() + l.weights.size());
    out.values.insert(out.values.end(), l.biases.data(),
                      l.biases.data() + l.biases.size());
    out.layer_offsets.push_back(out.values.size());
  }
  return out;
}

Mlp unflatten(const Mlp& shape_template, std::span<const double> params) {
  if (params.size() != shape_template.parameter_count()) {
    throw ShapeError("parameter vector has " + std::to_string(params.size()) +
                     " entries, model expects " +
                     std::to_string(shape_template.parameter_count()));
  }
  Mlp out = shape_template;
  std::size_t pos = 0;
  for (auto& l : out.layers) {
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos),
                l.weights.size(), l.weights.data());
    pos += static_cast<std::size_t>(l.weights.size());
    std::copy_n(params.begin() + static_cast<std::ptrdiff_t>(pos),
                l.biases.size(), l.biases.data());
    pos += static_cast<std::size_t>(l.biases.size());
  }
  return out;
}

void TrainConfig::validate(std::size_t dataset_size) const {
  if (!(learning_rate > 0.0 && learning_rate < 10.0)) {
    throw ConfigError("train.learning_rate must lie in (0, 10)");
  }
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (dataset_size > 0 && batch_size > dataset_size) {
    throw ConfigError("train.batch_size " + std::to_string(batch_size) +
                      " exceeds the local dataset size " +
                      std::to_string(dataset_size));
  }
}

ConfusionMatrix::ConfusionMatrix(std::size_t class_count)
    : classes_(class_count), counts_(class_count * class_count, 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted,
                          std::uint64_t n) {
  if (truth >= classes_ || predicted >= classes_) {
    throw DomainError("confusion matrix index out of range");
  }
  counts_[truth * classes_ + predicted] += n;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t truth) const {
  std::uint64_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(truth, p);
  return s;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < classes_; ++c) s += at(c, c);
  return s;
}

double ConfusionMatrix::accuracy() const {
  const auto t = total();
  return t == 0 ? 0.0 : static_cast<double>(trace()) / static_cast<double>(t);
}

Mlp init_model(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw DomainError("an MLP needs at least input and output dimensions");
  }
  for (auto d : layer_dims) {
    if (d == 0) throw DomainError("layer dimensions must be positive");
  }
  Rng rng(seed);
  Mlp model;
  for (std::size_t t = 0; t + 1 < layer_dims.size(); ++t) {
    const auto in = static_cast<Eigen::Index>(layer_dims[t]);
    const auto out = static_cast<Eigen::Index>(layer_dims[t + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Layer layer;
    layer.weights.resize(out, in);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
      layer.weights.data()[i] = dist(rng);
    }
    layer.biases = Vector::Zero(out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

// Activations of every layer for a batch; acts[0] is the input.
std::vector<Matrix> forward(const Mlp& model, const Matrix& x) {
  std::vector<Matrix> acts;
  acts.reserve(model.layers.size() + 1);
  acts.push_back(x);
  for (std::size_t t = 0; t < model.layers.size(); ++t) {
    const auto& l = model.layers[t];
    Matrix z = acts.back() * l.weights.transpose();
    z.rowwise() += l.biases.transpose();
    if (t + 1 < model.layers.size()) {
      z = z.cwiseMax(0.0);
    } else {
      for (Eigen::Index r = 0; r < z.rows(); ++r) {
        const double m = z.row(r).maxCoeff();
        z.row(r) = (z.row(r).array() - m).exp();
        z.row(r) /= z.row(r).sum();
      }
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

double cross_entropy(const Matrix& probs, std::span<const std::uint32_t> labels) {
  double loss = 0.0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    loss -= std::log(std::max(probs(r, labels[static_cast<std::size_t>(r)]),
                              1e-300));
  }
  return loss / static_cast<double>(probs.rows());
}

struct LayerGrad {
  Matrix weights;
  Vector biases;
};

// Backpropagation of the mean cross-entropy.
std::vector<LayerGrad> backward(const Mlp& model, const std::vector<Matrix>& acts,
                                std::span<const std::uint32_t> labels) {
  const auto batch = static_cast<double>(acts.front().rows());
  std::vector<LayerGrad> grads(model.layers.size());
  Matrix delta = acts.back();
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    delta(r, labels[static_cast<std::size_t>(r)]) -= 1.0;
  }
  delta /= batch;
  for (std::size_t t = model.layers.size(); t-- > 0;) {
    grads[t].weights = delta.transpose() * acts[t];
    grads[t].biases = delta.colwise().sum().transpose();
    if (t > 0) {
      Matrix prev = delta * model.layers[t].weights;
      prev = prev.cwiseProduct(
          (acts[t].array() > 0.0).cast<double>().matrix());
      delta = std::move(prev);
    }
  }
  return grads;
}

Matrix gather_rows(const data::FeatureMatrix& features,
                   std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), features.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

void check_data(const Mlp& model, const data::Dataset& data) {
  if (data.size() == 0) throw DomainError("dataset is empty");
  if (data.feature_dim() != model.input_dim()) {
    throw ShapeError("feature dimension " + std::to_string(data.feature_dim()) +
                     " does not match model input " +
                     std::to_string(model.input_dim()));
  }
  for (auto l : data.labels) {
    if (l >= model.class_count()) throw DomainError("label exceeds class count");
  }
}

}  // namespace

Mlp train(const Mlp& model, const data::Dataset& data, const TrainConfig& cfg,
          std::vector<double>* epoch_loss) {
  check_data(model, data);
  cfg.validate();
  Mlp out = model;
  const std::size_t n = data.size();
  const std::size_t batch = std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  std::vector<std::uint32_t> batch_labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t len = std::min(batch, n - start);
      auto rows = std::span<const std::size_t>(order).subspan(start, len);
      batch_labels.clear();
      for (auto r : rows) batch_labels.push_back(data.labels[r]);

      const auto acts = forward(out, gather_rows(data.features, rows));
      const double loss = cross_entropy(acts.back(), batch_labels);
      if (!std::isfinite(loss)) {
        throw DivergenceError(
            "training diverged (non-finite loss) in epoch " +
                std::to_string(epoch + 1),
            epoch + 1);
      }
      const auto grads = backward(out, acts, batch_labels);
      for (std::size_t t = 0; t < out.layers.size(); ++t) {
        out.layers[t].weights -= cfg.learning_rate * grads[t].weights;
        out.layers[t].biases -= cfg.learning_rate * grads[t].biases;
      }
    }
    if (!out.layers.back().weights.allFinite()) {
      throw DivergenceError("training diverged (non-finite weights) in epoch " +
                                std::to_string(epoch + 1),
                            epoch + 1);
    }
    if (epoch_loss != nullptr) epoch_loss->push_back(mean_loss(out, data));
  }
  return out;
}

Matrix predict_proba(const Mlp& model, const data::FeatureMatrix& features) {
  return forward(model, features).back();
}

std::vector<std::uint32_t> predict(const Mlp& model,
                                   const data::FeatureMatrix& features) {
  const Matrix probs = predict_proba(model, features);
  std::vector<std::uint32_t> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(r, c) > probs(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<std::uint32_t>(best);
  }
  return out;
}

ConfusionMatrix evaluate(const Mlp& model, const data::Dataset& data) {
  check_data(model, data);
  ConfusionMatrix cm(model.class_count());
  const auto predicted = predict(model, data.features);
  for (std::size_t i = 0; i < data.size(); ++i) cm.add(data.labels[i], predicted[i]);
  return cm;
}

double mean_loss(const Mlp& model, const data::Dataset& data) {
  check_data(model, data);
  return cross_entropy(predict_proba(model, data.features), data.labels);
}

std::vector<double> loss_gradient(const Mlp& model, const data::Dataset& data,
                                  double* loss) {
  check_data(model, data);
  const auto acts = forward(model, data.features);
  if (loss != nullptr) *loss = cross_entropy(acts.back(), data.labels);
  const auto grads = backward(model, acts, data.labels);
  Mlp as_model = model;
  for (std::size_t t = 0; t < grads.size(); ++t) {
    as_model.layers[t].weights = grads[t].weights;
    as_model.layers[t].biases = grads[t].biases;
  }
  return flatten(as_model).values;
}

}  // namespace fedshield::nn
