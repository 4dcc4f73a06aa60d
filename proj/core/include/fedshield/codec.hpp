#pragma once

#include <gmpxx.h>

#include <span>
#include <vector>

namespace fedshield::codec {

// Fixed-point map between reals and Z_N. Non-negative x encodes as
// round(x * 2^f); negative x as N - round(|x| * 2^f). Values at or above N/2
// decode as negative.
struct FixedPointConfig {
  unsigned fraction_bits = 24;
  double magnitude_bound = 64.0;
  mpz_class modulus_n;

  // 2 * bound * 2^f * max_summands < N must hold so that sums of up to
  // max_summands encodings never wrap. Throws ConfigError otherwise.
  void validate(unsigned long max_summands) const;
  double resolution() const;  // 2^-f
};

mpz_class encode(double x, const FixedPointConfig& cfg);
double decode(const mpz_class& v, const FixedPointConfig& cfg);

// Recovers the real average from v = S * count^-1 mod N, where S is the sum
// of `count` encodings. Throws AggregationError when S leaves the envelope
// |S| <= count * bound * 2^f.
double decode_average(const mpz_class& v, unsigned long count,
                      const FixedPointConfig& cfg);

std::vector<mpz_class> encode_all(std::span<const double> xs,
                                  const FixedPointConfig& cfg);

}  // namespace fedshield::codec
