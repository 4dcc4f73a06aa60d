#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "fedshield/defense.hpp"
#include "fedshield/nn.hpp"

// Kullback-Leibler anomaly detection over per-layer weight histograms. Needs
// no test data: models are compared against a randomly chosen peer.
namespace fedshield::klad {

struct HistogramDistribution {
  std::vector<double> bin_edges;      // bin_count + 1, strictly increasing
  std::vector<double> probabilities;  // bin_count, all > 0, sum 1
  double smoothing_epsilon = 0.0;

  std::size_t bin_count() const noexcept { return probabilities.size(); }
};

enum class ReferenceMode { kSingleRandom, kMultiReference };

struct KladConfig {
  double theta = 1.0;
  std::size_t bin_count = 64;
  double smoothing_epsilon = 1e-9;
  ReferenceMode reference_mode = ReferenceMode::kSingleRandom;
  std::size_t references = 5;  // used by kMultiReference
  std::uint64_t seed = 0;

  void validate() const;
};

// Equal-width bins over [lo, hi]; values outside clamp to the end bins.
// Each bin gets `epsilon` added before renormalizing.
HistogramDistribution layer_histogram(std::span<const double> values, double lo,
                                      double hi, std::size_t bin_count,
                                      double epsilon);

// sum_b p_b ln(p_b / q_b). Throws DomainError unless the bin edges match.
double kl_divergence(const HistogramDistribution& p,
                     const HistogramDistribution& q);

// Mean over layers of KL(hist(ref layer) || hist(other layer)); each layer
// uses the range spanned by both models' values in that layer.
double model_divergence(const nn::Mlp& ref, const nn::Mlp& other,
                        const KladConfig& cfg);

// Divergences of every model from one reference, and the relative deviation
// rho_j = |F_j - mean F| / |mean F|.
struct DivergenceReport {
  std::size_t reference_id = 0;
  std::vector<std::size_t> client_ids;
  std::vector<double> divergence;  // F_j
  double mean_divergence = 0.0;    // F tilde
  std::vector<double> rho;
  bool degenerate = false;         // mean F = 0; rho left at 0
};

struct KladResult {
  Verdict verdict;
  std::vector<DivergenceReport> reports;  // one per reference
  std::vector<std::size_t> votes;         // per model, reports flagging it
  bool degenerate = false;                // every report was degenerate
};

// models[i] was submitted by client_ids[i]. Needs at least three models of
// identical architecture.
KladResult detect(std::span<const nn::Mlp> models,
                  std::span<const std::size_t> client_ids, const KladConfig& cfg,
                  std::size_t threads = 1);

// Header `client_id,F,rho,flagged,reference_id`; one row per (reference,
// client).
void write_csv(const KladResult& result, std::ostream& out);

}  // namespace fedshield::klad
