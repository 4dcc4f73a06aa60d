#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <vector>

namespace fedshield::paillier {

// Seeded big-integer random source. Each worker owns one; not thread-safe.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed);

  RandomSource(const RandomSource&) = delete;
  RandomSource& operator=(const RandomSource&) = delete;

  // Uniform in [0, bound).
  mpz_class below(const mpz_class& bound);
  // Uniform in [0, 2^bits).
  mpz_class bits(unsigned bits);

 private:
  gmp_randclass state_;
};

struct PublicKey {
  mpz_class n;
  mpz_class g;
  mpz_class n_squared;

  unsigned bit_length() const;
  friend bool operator==(const PublicKey&, const PublicKey&) = default;
};

struct PrivateKey {
  mpz_class lambda;
  mpz_class mu;
  mpz_class n;

  friend bool operator==(const PrivateKey&, const PrivateKey&) = default;
};

struct Keypair {
  PublicKey public_key;
  PrivateKey private_key;
};

class Ciphertext {
 public:
  Ciphertext() = default;
  explicit Ciphertext(mpz_class value) : value_(std::move(value)) {}

  const mpz_class& value() const noexcept { return value_; }

  friend bool operator==(const Ciphertext& a, const Ciphertext& b) {
    return a.value_ == b.value_;
  }

 private:
  mpz_class value_;
};

using CipherVector = std::vector<Ciphertext>;

inline constexpr int kMillerRabinRounds = 40;
inline constexpr unsigned kMinKeyBits = 16;

// Miller-Rabin with `rounds` random bases drawn from `rng`.
bool is_probable_prime(const mpz_class& candidate, int rounds,
                       RandomSource& rng);

// Random prime with exactly `bits` bits and the top two bits set.
// Throws KeygenRetryError once `max_attempts` odd candidates are exhausted.
mpz_class random_prime(unsigned bits, RandomSource& rng,
                       unsigned max_attempts);

// Generates a key whose modulus has exactly `bit_length` bits, g = N + 1.
Keypair keygen(unsigned bit_length, RandomSource& rng);

// Builds a key from caller-chosen primes. Used for hand-checkable toy keys.
Keypair keypair_from_primes(const mpz_class& p, const mpz_class& q);

// L(x) = (x - 1) / N.
mpz_class l_function(const mpz_class& x, const mpz_class& n);

// Throws DomainError when a key violates its type invariants.
void validate(const PublicKey& pk);
void validate(const Keypair& keys);

Ciphertext encrypt(const PublicKey& pk, const mpz_class& plaintext,
                   RandomSource& rng);
// Deterministic encryption with caller-supplied r; r must be a unit mod N.
Ciphertext encrypt_with(const PublicKey& pk, const mpz_class& plaintext,
                        const mpz_class& r);

mpz_class decrypt(const PrivateKey& sk, const Ciphertext& c);

// Enc(m1) * Enc(m2) mod N^2 = Enc(m1 + m2 mod N).
Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b);

// c^k mod N^2 = Enc(k * m mod N).
Ciphertext scalar_exponent(const PublicKey& pk, const Ciphertext& c,
                           const mpz_class& k);

// c^(count^-1 mod N): the modular reading of the count-th root used when
// averaging ciphertexts. Throws DegenerateKeyError if count is not a unit.
Ciphertext inverse_scale(const PublicKey& pk, const Ciphertext& c,
                         unsigned long count);

// count^-1 mod N.
mpz_class inverse_mod_n(const PublicKey& pk, unsigned long count);

// Element-wise product of inverse_scale(c_i, inputs.size()) over the inputs,
// i.e. the encrypted average of equally weighted vectors. Bit-identical to
// scaling each input separately.
CipherVector aggregate_average(const PublicKey& pk,
                               std::span<const CipherVector> inputs);

}  // namespace fedshield::paillier
