#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <gmpxx.h>

#include "fedshield/data.hpp"
#include "fedshield/nn.hpp"
#include "fedshield/paillier.hpp"

// Hand-rolled generators for property tests. Every generator is a pure
// function of the Rng state so failures replay from the printed seed.
namespace fedshield::testing {

using Gen = std::mt19937_64;

inline constexpr int kPropertyCases = 200;

inline double uniform(Gen& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline std::size_t uniform_size(Gen& g, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(g);
}

inline std::vector<double> real_vector(Gen& g, std::size_t n, double lo, double hi) {
  std::vector<double> out(n);
  for (auto& v : out) v = uniform(g, lo, hi);
  return out;
}

inline mpz_class residue(Gen& g, const mpz_class& n) {
  gmp_randclass r(gmp_randinit_mt);
  r.seed(static_cast<unsigned long>(g()));
  return r.get_z_range(n);
}

// Cached keys: keygen dominates runtime otherwise.
inline const paillier::Keypair& test_keys(unsigned bits) {
  static std::vector<std::pair<unsigned, paillier::Keypair>> cache;
  for (const auto& [b, k] : cache) {
    if (b == bits) return k;
  }
  paillier::RandomSource rng(0xC0FFEE + bits);
  cache.emplace_back(bits, paillier::keygen(bits, rng));
  return cache.back().second;
}

// Small labelled dataset with Gaussian features.
inline data::Dataset random_dataset(Gen& g, std::size_t n, std::size_t dim,
                                    std::size_t classes) {
  data::Dataset d;
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < d.features.size(); ++i) d.features.data()[i] = normal(g);
  d.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.labels[i] = static_cast<std::uint32_t>(i % classes);
  d.class_count = classes;
  d.sample_shape = {static_cast<std::uint32_t>(dim)};
  return d;
}

}  // namespace fedshield::testing
