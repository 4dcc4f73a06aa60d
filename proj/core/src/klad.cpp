#include "fedshield/klad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "fedshield/errors.hpp"
#include "fedshield/parallel.hpp"
#include "fedshield/random.hpp"

namespace fedshield::klad {

void KladConfig::validate() const {
  if (!(theta >= 0.0)) throw ConfigError("klad.theta must be non-negative");
  if (bin_count < 2) throw ConfigError("klad.bins must be at least 2");
  if (!(smoothing_epsilon > 0.0)) {
    throw ConfigError("klad.smoothing must be positive");
  }
  if (reference_mode == ReferenceMode::kMultiReference && references == 0) {
    throw ConfigError("klad.references must be positive");
  }
}

HistogramDistribution layer_histogram(std::span<const double> values, double lo,
                                      double hi, std::size_t bin_count,
                                      double epsilon) {
  if (!(lo < hi)) throw DomainError("histogram range needs lo < hi");
  if (values.empty()) throw DomainError("histogram of an empty layer");
  if (bin_count == 0) throw DomainError("histogram needs at least one bin");

  HistogramDistribution h;
  h.smoothing_epsilon = epsilon;
  h.bin_edges.resize(bin_count + 1);
  const double width = (hi - lo) / static_cast<double>(bin_count);
  for (std::size_t b = 0; b <= bin_count; ++b) {
    h.bin_edges[b] = lo + width * static_cast<double>(b);
  }
  h.bin_edges.back() = hi;

  std::vector<double> counts(bin_count, 0.0);
  const double scale = static_cast<double>(bin_count) / (hi - lo);
  for (double v : values) {
    const double pos = std::floor((v - lo) * scale);
    const auto bin = static_cast<std::size_t>(
        std::clamp(pos, 0.0, static_cast<double>(bin_count - 1)));
    counts[bin] += 1.0;
  }
  const double n = static_cast<double>(values.size());
  const double norm = 1.0 + static_cast<double>(bin_count) * epsilon;
  h.probabilities.resize(bin_count);
  for (std::size_t b = 0; b < bin_count; ++b) {
    h.probabilities[b] = (counts[b] / n + epsilon) / norm;
  }
  return h;
}

double kl_divergence(const HistogramDistribution& p,
                     const HistogramDistribution& q) {
  if (p.bin_edges != q.bin_edges || p.bin_count() != q.bin_count()) {
    throw DomainError("KL divergence needs histograms over identical bins");
  }
  double sum = 0.0;
  for (std::size_t b = 0; b < p.bin_count(); ++b) {
    const double pb = p.probabilities[b];
    if (pb > 0.0) sum += pb * std::log(pb / q.probabilities[b]);
  }
  return std::max(sum, 0.0);
}

namespace {

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(std::span<const double> values) {
    for (double v : values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  // A single-valued range is widened so every value lands in one bin.
  Range usable() const {
    if (lo < hi) return *this;
    return Range{lo - 0.5, lo + 0.5};
  }
};

}  // namespace

double model_divergence(const nn::Mlp& ref, const nn::Mlp& other,
                        const KladConfig& cfg) {
  if (!nn::same_architecture(ref, other)) {
    throw ShapeError("model divergence needs identical architectures");
  }
  if (ref.layer_count() == 0) throw ShapeError("model has no layers");
  const auto a = nn::flatten(ref);
  const auto b = nn::flatten(other);
  double total = 0.0;
  for (std::size_t t = 0; t < a.layer_count(); ++t) {
    Range r;
    r.include(a.layer(t));
    r.include(b.layer(t));
    const Range u = r.usable();
    total += kl_divergence(
        layer_histogram(a.layer(t), u.lo, u.hi, cfg.bin_count, cfg.smoothing_epsilon),
        layer_histogram(b.layer(t), u.lo, u.hi, cfg.bin_count, cfg.smoothing_epsilon));
  }
  return total / static_cast<double>(a.layer_count());
}

KladResult detect(std::span<const nn::Mlp> models,
                  std::span<const std::size_t> client_ids, const KladConfig& cfg,
                  std::size_t threads) {
  cfg.validate();
  const std::size_t m = models.size();
  if (m < 3) throw DomainError("KLAD needs at least three models");
  if (client_ids.size() != m) throw ShapeError("models and client ids differ in length");
  for (const auto& model : models) {
    if (!nn::same_architecture(model, models.front())) {
      throw ShapeError("KLAD needs identical architectures");
    }
  }

  // Per-layer bin ranges shared by the whole population so that every
  // pairwise divergence is taken over the same support.
  std::vector<nn::ModelParams> flat(m);
  for (std::size_t i = 0; i < m; ++i) flat[i] = nn::flatten(models[i]);
  const std::size_t layers = flat.front().layer_count();
  std::vector<Range> ranges(layers);
  for (std::size_t t = 0; t < layers; ++t) {
    for (const auto& f : flat) ranges[t].include(f.layer(t));
    ranges[t] = ranges[t].usable();
  }
  std::vector<std::vector<HistogramDistribution>> hist(
      m, std::vector<HistogramDistribution>(layers));
  parallel_for(m, threads, [&](std::size_t i) {
    for (std::size_t t = 0; t < layers; ++t) {
      hist[i][t] = layer_histogram(flat[i].layer(t), ranges[t].lo, ranges[t].hi,
                                   cfg.bin_count, cfg.smoothing_epsilon);
    }
  });

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(cfg.seed);
  std::vector<std::size_t> references;
  if (cfg.reference_mode == ReferenceMode::kSingleRandom) {
    references.push_back(std::uniform_int_distribution<std::size_t>(0, m - 1)(rng));
  } else {
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t r = std::min(cfg.references, m);
    references.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r));
  }

  KladResult result;
  result.votes.assign(m, 0);
  result.degenerate = true;
  for (std::size_t ref : references) {
    DivergenceReport report;
    report.reference_id = client_ids[ref];
    report.client_ids.assign(client_ids.begin(), client_ids.end());
    report.divergence.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      double f = 0.0;
      for (std::size_t t = 0; t < layers; ++t) {
        f += kl_divergence(hist[ref][t], hist[j][t]);
      }
      report.divergence[j] = f / static_cast<double>(layers);
    }
    report.mean_divergence =
        std::accumulate(report.divergence.begin(), report.divergence.end(), 0.0) /
        static_cast<double>(m);
    report.rho.assign(m, 0.0);
    if (report.mean_divergence == 0.0) {
      report.degenerate = true;
    } else {
      result.degenerate = false;
      for (std::size_t j = 0; j < m; ++j) {
        report.rho[j] = std::fabs(report.divergence[j] - report.mean_divergence) /
                        std::fabs(report.mean_divergence);
        if (report.rho[j] > cfg.theta) ++result.votes[j];
      }
    }
    result.reports.push_back(std::move(report));
  }

  const std::size_t r = references.size();
  for (std::size_t j = 0; j < m; ++j) {
    const bool flagged = 2 * result.votes[j] > r;
    (flagged ? result.verdict.flagged_ids : result.verdict.benign_ids)
        .push_back(client_ids[j]);
  }
  std::sort(result.verdict.benign_ids.begin(), result.verdict.benign_ids.end());
  std::sort(result.verdict.flagged_ids.begin(), result.verdict.flagged_ids.end());
  return result;
}

void write_csv(const KladResult& result, std::ostream& out) {
  out << "client_id,F,rho,flagged,reference_id\n";
  const auto old_precision = out.precision(17);
  for (const auto& report : result.reports) {
    for (std::size_t j = 0; j < report.client_ids.size(); ++j) {
      const auto id = report.client_ids[j];
      const bool flagged = std::binary_search(result.verdict.flagged_ids.begin(),
                                              result.verdict.flagged_ids.end(), id);
      out << id << ',' << report.divergence[j] << ',' << report.rho[j] << ','
          << (flagged ? 1 : 0) << ',' << report.reference_id << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace fedshield::klad
