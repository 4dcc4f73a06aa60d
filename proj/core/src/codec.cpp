#include "fedshield/codec.hpp"

#include <cmath>
#include <string>

#include "fedshield/errors.hpp"

namespace fedshield::codec {

namespace {

// bound * 2^f * count as an exact big integer (bound rounded up).
mpz_class envelope(const FixedPointConfig& cfg, unsigned long count) {
  mpz_class e(std::ceil(cfg.magnitude_bound));
  mpz_mul_2exp(e.get_mpz_t(), e.get_mpz_t(), cfg.fraction_bits);
  return e * count;
}

// Signed value of v in (-N/2, N/2].
mpz_class centered(const mpz_class& v, const mpz_class& n) {
  if (2 * v < n) return v;
  return v - n;
}

double signed_to_real(const mpz_class& s, unsigned fraction_bits) {
  // mpz -> double is exact while |s| < 2^53; ldexp is exact.
  return std::ldexp(s.get_d(), -static_cast<int>(fraction_bits));
}

}  // namespace

void FixedPointConfig::validate(unsigned long max_summands) const {
  if (fraction_bits < 1) throw ConfigError("codec.fraction_bits must be >= 1");
  if (fraction_bits > 40) throw ConfigError("codec.fraction_bits must be <= 40");
  if (!(magnitude_bound > 0.0) || !std::isfinite(magnitude_bound)) {
    throw ConfigError("codec.magnitude_bound must be positive and finite");
  }
  if (2 * envelope(*this, max_summands) >= modulus_n) {
    throw ConfigError(
        "codec envelope 2 * bound * 2^f * " + std::to_string(max_summands) +
        " does not fit below the Paillier modulus; raise key_bits");
  }
}

double FixedPointConfig::resolution() const {
  return std::ldexp(1.0, -static_cast<int>(fraction_bits));
}

mpz_class encode(double x, const FixedPointConfig& cfg) {
  if (!std::isfinite(x) || std::fabs(x) > cfg.magnitude_bound) {
    throw DomainError("value " + std::to_string(x) +
                      " outside the fixed-point magnitude bound");
  }
  // Scaling by a power of two is exact; nearbyint rounds half to even under
  // the default floating-point environment.
  const double scaled =
      std::nearbyint(std::ldexp(std::fabs(x), static_cast<int>(cfg.fraction_bits)));
  mpz_class magnitude(scaled);
  if (x < 0.0 && magnitude != 0) return cfg.modulus_n - magnitude;
  return magnitude;
}

double decode(const mpz_class& v, const FixedPointConfig& cfg) {
  return signed_to_real(centered(v, cfg.modulus_n), cfg.fraction_bits);
}

double decode_average(const mpz_class& v, unsigned long count,
                      const FixedPointConfig& cfg) {
  if (count == 0) throw DomainError("decode_average needs a positive count");
  const mpz_class sum = (v * count) % cfg.modulus_n;
  const mpz_class s = centered(sum, cfg.modulus_n);
  if (abs(s) > envelope(cfg, count)) {
    throw AggregationError("aggregated sum left the fixed-point envelope");
  }
  return signed_to_real(s, cfg.fraction_bits) / static_cast<double>(count);
}

std::vector<mpz_class> encode_all(std::span<const double> xs,
                                  const FixedPointConfig& cfg) {
  std::vector<mpz_class> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back(encode(x, cfg));
  return out;
}

}  // namespace fedshield::codec
