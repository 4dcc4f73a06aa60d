#pragma once

#include <string>
#include <string_view>

#include "fedshield/paillier.hpp"

namespace fedshield::paillier {

// Lowercase big-endian hexadecimal without prefix; zero is "0".
std::string to_hex(const mpz_class& value);
// Throws ParseError on anything but [0-9a-f]+.
mpz_class from_hex(std::string_view hex);

// {"n": "<hex>", "g": "<hex>"}
std::string public_key_to_json(const PublicKey& pk);
PublicKey public_key_from_json(std::string_view json);

// {"lambda": "<hex>", "mu": "<hex>", "n": "<hex>"}
std::string private_key_to_json(const PrivateKey& sk);
PrivateKey private_key_from_json(std::string_view json);

}  // namespace fedshield::paillier
