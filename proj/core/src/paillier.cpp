#include "fedshield/paillier.hpp"

#include <string>

#include "fedshield/errors.hpp"

namespace fedshield::paillier {

RandomSource::RandomSource(std::uint64_t seed) : state_(gmp_randinit_mt) {
  mpz_class s;
  mpz_import(s.get_mpz_t(), 1, 1, sizeof(seed), 0, 0, &seed);
  state_.seed(s);
}

mpz_class RandomSource::below(const mpz_class& bound) {
  return state_.get_z_range(bound);
}

mpz_class RandomSource::bits(unsigned bits) { return state_.get_z_bits(bits); }

unsigned PublicKey::bit_length() const {
  return static_cast<unsigned>(mpz_sizeinbase(n.get_mpz_t(), 2));
}

namespace {

mpz_class powm(const mpz_class& base, const mpz_class& exp,
               const mpz_class& mod) {
  mpz_class out;
  mpz_powm(out.get_mpz_t(), base.get_mpz_t(), exp.get_mpz_t(),
           mod.get_mpz_t());
  return out;
}

mpz_class gcd(const mpz_class& a, const mpz_class& b) {
  mpz_class out;
  mpz_gcd(out.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return out;
}

// Returns false when no inverse exists.
bool invert(mpz_class& out, const mpz_class& a, const mpz_class& mod) {
  return mpz_invert(out.get_mpz_t(), a.get_mpz_t(), mod.get_mpz_t()) != 0;
}

// Small primes for cheap trial division before Miller-Rabin.
constexpr unsigned kSmallPrimes[] = {3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                                     37, 41, 43, 47, 53, 59, 61, 67, 71, 73,
                                     79, 83, 89, 97, 101, 103, 107, 109, 113};

}  // namespace

bool is_probable_prime(const mpz_class& candidate, int rounds,
                       RandomSource& rng) {
  if (candidate < 2) return false;
  if (candidate < 4) return true;
  if (mpz_even_p(candidate.get_mpz_t())) return false;
  for (unsigned p : kSmallPrimes) {
    if (candidate == p) return true;
    if (mpz_divisible_ui_p(candidate.get_mpz_t(), p)) return false;
  }

  // candidate - 1 = d * 2^s with d odd
  const mpz_class n_minus_1 = candidate - 1;
  mpz_class d = n_minus_1;
  unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
  mpz_fdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);

  const mpz_class base_range = candidate - 3;  // bases in [2, n-2]
  for (int round = 0; round < rounds; ++round) {
    mpz_class a = rng.below(base_range) + 2;
    mpz_class x = powm(a, d, candidate);
    if (x == 1 || x == n_minus_1) continue;
    bool witness = true;
    for (unsigned long r = 1; r < s; ++r) {
      x = (x * x) % candidate;
      if (x == n_minus_1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

mpz_class random_prime(unsigned bits, RandomSource& rng,
                       unsigned max_attempts) {
  if (bits < 3) throw DomainError("prime bit length must be at least 3");
  for (unsigned attempt = 0; attempt < max_attempts; ++attempt) {
    mpz_class candidate = rng.bits(bits);
    mpz_setbit(candidate.get_mpz_t(), bits - 1);
    mpz_setbit(candidate.get_mpz_t(), bits - 2);
    mpz_setbit(candidate.get_mpz_t(), 0);
    if (is_probable_prime(candidate, kMillerRabinRounds, rng)) return candidate;
  }
  throw KeygenRetryError("no " + std::to_string(bits) + "-bit prime found in " +
                         std::to_string(max_attempts) +
                         " attempts; retry with a different seed");
}

Keypair keypair_from_primes(const mpz_class& p, const mpz_class& q) {
  if (p == q) throw DomainError("Paillier primes must be distinct");
  if (p < 3 || q < 3) throw DomainError("Paillier primes must be odd primes");
  const mpz_class n = p * q;
  const mpz_class phi = (p - 1) * (q - 1);
  if (gcd(n, phi) != 1) throw DomainError("gcd(pq, (p-1)(q-1)) must be 1");

  Keypair keys;
  keys.public_key.n = n;
  keys.public_key.g = n + 1;
  keys.public_key.n_squared = n * n;
  keys.private_key.n = n;
  keys.private_key.lambda = ::lcm(mpz_class(p - 1), mpz_class(q - 1));
  const mpz_class u = l_function(
      powm(keys.public_key.g, keys.private_key.lambda, keys.public_key.n_squared),
      n);
  if (!invert(keys.private_key.mu, u, n)) {
    throw DegenerateKeyError("L(g^lambda mod N^2) is not invertible mod N");
  }
  return keys;
}

Keypair keygen(unsigned bit_length, RandomSource& rng) {
  if (bit_length < kMinKeyBits) {
    throw DomainError("key bit length " + std::to_string(bit_length) +
                      " is below the minimum of " + std::to_string(kMinKeyBits));
  }
  const unsigned p_bits = (bit_length + 1) / 2;
  const unsigned q_bits = bit_length / 2;
  const unsigned budget = 64 * bit_length;
  const mpz_class p = random_prime(p_bits, rng, budget);
  mpz_class q = random_prime(q_bits, rng, budget);
  for (unsigned retry = 0; q == p && retry < 16; ++retry) {
    q = random_prime(q_bits, rng, budget);
  }
  Keypair keys = keypair_from_primes(p, q);
  if (keys.public_key.bit_length() != bit_length) {
    throw KeygenRetryError("modulus bit length mismatch");
  }
  return keys;
}

mpz_class l_function(const mpz_class& x, const mpz_class& n) {
  mpz_class out = x - 1;
  mpz_divexact(out.get_mpz_t(), out.get_mpz_t(), n.get_mpz_t());
  return out;
}

void validate(const PublicKey& pk) {
  if (pk.n < 3) throw DomainError("public key modulus too small");
  if (pk.n_squared != pk.n * pk.n) {
    throw DomainError("public key n_squared does not equal n^2");
  }
  if (pk.g <= 0 || pk.g >= pk.n_squared) {
    throw DomainError("generator outside [1, n^2)");
  }
  if (gcd(pk.g, pk.n_squared) != 1) {
    throw DomainError("generator is not a unit mod n^2");
  }
}

void validate(const Keypair& keys) {
  validate(keys.public_key);
  const auto& pk = keys.public_key;
  const auto& sk = keys.private_key;
  if (sk.n != pk.n) throw DomainError("private and public modulus differ");
  const mpz_class u = l_function(powm(pk.g, sk.lambda, pk.n_squared), pk.n);
  if ((sk.mu * u) % pk.n != 1) {
    throw DomainError("mu * L(g^lambda mod N^2) != 1 mod N");
  }
}

Ciphertext encrypt_with(const PublicKey& pk, const mpz_class& plaintext,
                        const mpz_class& r) {
  if (plaintext < 0 || plaintext >= pk.n) {
    throw DomainError("plaintext outside Z_N");
  }
  if (r <= 0 || r >= pk.n || gcd(r, pk.n) != 1) {
    throw DomainError("encryption randomness must be a unit of Z_N");
  }
  // g^m with g = N + 1 collapses to 1 + mN mod N^2; any other g takes the
  // generic exponentiation.
  mpz_class gm;
  if (pk.g == pk.n + 1) {
    gm = (1 + plaintext * pk.n) % pk.n_squared;
  } else {
    gm = powm(pk.g, plaintext, pk.n_squared);
  }
  return Ciphertext((gm * powm(r, pk.n, pk.n_squared)) % pk.n_squared);
}

Ciphertext encrypt(const PublicKey& pk, const mpz_class& plaintext,
                   RandomSource& rng) {
  mpz_class r;
  do {
    r = rng.below(pk.n);
  } while (r == 0 || gcd(r, pk.n) != 1);
  return encrypt_with(pk, plaintext, r);
}

mpz_class decrypt(const PrivateKey& sk, const Ciphertext& c) {
  const mpz_class n_squared = sk.n * sk.n;
  const mpz_class& v = c.value();
  if (v <= 0 || v >= n_squared || gcd(v, n_squared) != 1) {
    throw InvalidCiphertextError("ciphertext is not a unit mod N^2");
  }
  return (l_function(powm(v, sk.lambda, n_squared), sk.n) * sk.mu) % sk.n;
}

Ciphertext add(const PublicKey& pk, const Ciphertext& a, const Ciphertext& b) {
  return Ciphertext((a.value() * b.value()) % pk.n_squared);
}

Ciphertext scalar_exponent(const PublicKey& pk, const Ciphertext& c,
                           const mpz_class& k) {
  if (k < 0 || k >= pk.n) throw DomainError("scalar outside Z_N");
  return Ciphertext(powm(c.value(), k, pk.n_squared));
}

mpz_class inverse_mod_n(const PublicKey& pk, unsigned long count) {
  if (count == 0) throw DomainError("count must be positive");
  mpz_class inv;
  if (!invert(inv, mpz_class(count), pk.n)) {
    throw DegenerateKeyError("count " + std::to_string(count) +
                             " is not invertible mod N; key too small");
  }
  return inv;
}

Ciphertext inverse_scale(const PublicKey& pk, const Ciphertext& c,
                         unsigned long count) {
  return Ciphertext(powm(c.value(), inverse_mod_n(pk, count), pk.n_squared));
}

CipherVector aggregate_average(const PublicKey& pk,
                               std::span<const CipherVector> inputs) {
  if (inputs.empty()) throw DomainError("nothing to aggregate");
  const std::size_t width = inputs.front().size();
  for (const auto& v : inputs) {
    if (v.size() != width) throw ShapeError("ciphertext vectors differ in length");
  }
  const mpz_class inv = inverse_mod_n(pk, inputs.size());
  // prod(c_i^inv) = (prod c_i)^inv mod N^2: one exponentiation per slot.
  CipherVector out;
  out.reserve(width);
  for (std::size_t k = 0; k < width; ++k) {
    mpz_class acc = 1;
    for (const auto& v : inputs) acc = (acc * v[k].value()) % pk.n_squared;
    out.emplace_back(powm(acc, inv, pk.n_squared));
  }
  return out;
}

}  // namespace fedshield::paillier
