#include <gtest/gtest.h>

#include <cmath>

#include "fedshield/codec.hpp"
#include "fedshield/errors.hpp"
#include "fedshield/paillier.hpp"
#include "support.hpp"

namespace fedshield::codec {
namespace {

using testing::Gen;

FixedPointConfig toy(unsigned f, long n, double bound = 2.0) {
  return FixedPointConfig{f, bound, mpz_class(n)};
}

TEST(Encode, HandValues) {
  const auto cfg = toy(4, 35);
  EXPECT_EQ(encode(0.0, cfg), 0);
  EXPECT_EQ(encode(1.5, cfg), 24);
  EXPECT_EQ(encode(-1.5, cfg), 11);
  EXPECT_EQ(encode(-0.0, cfg), 0);
}

TEST(Encode, RoundsHalfToEven) {
  const auto cfg = toy(1, 1000003, 10.0);
  EXPECT_EQ(encode(0.25, cfg), 0);  // 0.5 -> 0
  EXPECT_EQ(encode(0.75, cfg), 2);  // 1.5 -> 2
  EXPECT_EQ(encode(1.25, cfg), 2);  // 2.5 -> 2
}

TEST(Encode, RejectsOutOfBound) {
  const auto cfg = toy(4, 1000003);
  EXPECT_THROW(encode(2.5, cfg), DomainError);
  EXPECT_THROW(encode(NAN, cfg), DomainError);
  EXPECT_THROW(encode(INFINITY, cfg), DomainError);
}

TEST(Decode, SignFollowsHalfModulus) {
  const auto cfg = toy(4, 1000003);
  EXPECT_DOUBLE_EQ(decode(24, cfg), 1.5);
  EXPECT_DOUBLE_EQ(decode(1000003 - 24, cfg), -1.5);
  EXPECT_DOUBLE_EQ(decode(encode(0.75, cfg), cfg), 0.75);
}

TEST(DecodeAverage, SingleSummandMatchesDecode) {
  const auto cfg = toy(8, 1000003);
  for (double x : {-1.75, -0.5, 0.0, 0.3, 1.99}) {
    const auto v = encode(x, cfg);
    EXPECT_DOUBLE_EQ(decode_average(v, 1, cfg), decode(v, cfg));
  }
}

TEST(DecodeAverage, ToyKeyAverageOfOneTwoThree) {
  const auto keys = paillier::keypair_from_primes(1009, 1013);
  const auto& pk = keys.public_key;
  const FixedPointConfig cfg{4, 4.0, pk.n};
  cfg.validate(3);

  // Independent oracle: S * 3^-1 mod N by exhaustive search for the inverse.
  const unsigned long n = pk.n.get_ui();
  unsigned long inv3 = 0;
  for (unsigned long k = 1; k < n; ++k) {
    if ((3 * k) % n == 1) {
      inv3 = k;
      break;
    }
  }
  const unsigned long expected_v = (96 * inv3) % n;  // S = 16 + 32 + 48

  paillier::RandomSource rng(1);
  std::vector<paillier::CipherVector> inputs;
  for (double x : {1.0, 2.0, 3.0}) {
    inputs.push_back({paillier::encrypt(pk, encode(x, cfg), rng)});
  }
  const auto avg = paillier::aggregate_average(pk, inputs);
  const mpz_class v = paillier::decrypt(keys.private_key, avg[0]);
  EXPECT_EQ(v, expected_v);
  EXPECT_DOUBLE_EQ(decode_average(v, 3, cfg), 2.0);
}

TEST(DecodeAverage, SymmetricPairCancels) {
  const auto cfg = toy(10, 100000007, 8.0);
  const mpz_class inv2 = (cfg.modulus_n + 1) / 2;
  for (double x : {0.5, 3.25, 7.0}) {
    const mpz_class s = (encode(x, cfg) + encode(-x, cfg)) % cfg.modulus_n;
    EXPECT_DOUBLE_EQ(decode_average(mpz_class((s * inv2) % cfg.modulus_n), 2, cfg), 0.0);
  }
}

TEST(DecodeAverage, RejectsSumOutsideEnvelope) {
  const auto cfg = toy(4, 1000003);
  EXPECT_THROW(decode_average(500000, 1, cfg), AggregationError);
  EXPECT_THROW(decode_average(1, 0, cfg), DomainError);
}

TEST(Config, ValidateChecksEnvelopeAndBits) {
  EXPECT_THROW(toy(4, 35).validate(1), ConfigError);
  EXPECT_NO_THROW(toy(4, 1000003).validate(10));
  EXPECT_THROW(toy(0, 1000003).validate(1), ConfigError);
  EXPECT_THROW(toy(41, 1000003).validate(1), ConfigError);
  EXPECT_DOUBLE_EQ(toy(24, 1000003).resolution(), std::ldexp(1.0, -24));
}

TEST(Property, RoundTripWithinResolution) {
  const auto& keys = testing::test_keys(256);
  const FixedPointConfig cfg{24, 64.0, keys.public_key.n};
  Gen g(101);
  for (int i = 0; i < 10 * testing::kPropertyCases; ++i) {
    const double x = testing::uniform(g, -64.0, 64.0);
    EXPECT_LE(std::fabs(decode(encode(x, cfg), cfg) - x), cfg.resolution()) << x;
  }
}

TEST(Property, ModularSumMatchesRealSum) {
  const auto& keys = testing::test_keys(256);
  const FixedPointConfig cfg{24, 64.0, keys.public_key.n};
  Gen g(102);
  for (int i = 0; i < testing::kPropertyCases; ++i) {
    const std::size_t m = testing::uniform_size(g, 1, 20);
    const auto xs = testing::real_vector(g, m, -64.0, 64.0);
    mpz_class sum = 0;
    double real = 0.0;
    for (double x : xs) {
      sum = (sum + encode(x, cfg)) % cfg.modulus_n;
      real += x;
    }
    const mpz_class inv = paillier::inverse_mod_n(keys.public_key, m);
    const double avg = decode_average(mpz_class((sum * inv) % cfg.modulus_n), m, cfg);
    EXPECT_LE(std::fabs(avg - real / static_cast<double>(m)), cfg.resolution());
  }
}

}  // namespace
}  // namespace fedshield::codec
