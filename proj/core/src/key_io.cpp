#include "fedshield/key_io.hpp"

#include <json.hpp>

#include "fedshield/errors.hpp"

namespace fedshield::paillier {

using nlohmann::json;

std::string to_hex(const mpz_class& value) {
  if (value < 0) throw DomainError("negative values have no hex encoding");
  return value.get_str(16);
}

mpz_class from_hex(std::string_view hex) {
  if (hex.empty()) throw ParseError("empty hex string", 0);
  for (std::size_t i = 0; i < hex.size(); ++i) {
    const char ch = hex[i];
    if (!((ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'f'))) {
      throw ParseError("invalid lowercase hex digit", i);
    }
  }
  return mpz_class(std::string(hex), 16);
}

namespace {

json parse_object(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ParseError("key file is not a JSON object", 0);
  }
  return doc;
}

mpz_class field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end() || !it->is_string()) {
    throw ParseError(std::string("missing hex field \"") + name + "\"", 0);
  }
  return from_hex(it->get<std::string>());
}

}  // namespace

std::string public_key_to_json(const PublicKey& pk) {
  json doc = {{"n", to_hex(pk.n)}, {"g", to_hex(pk.g)}};
  return doc.dump(2) + "\n";
}

PublicKey public_key_from_json(std::string_view text) {
  const json doc = parse_object(text);
  PublicKey pk;
  pk.n = field(doc, "n");
  pk.g = field(doc, "g");
  pk.n_squared = pk.n * pk.n;
  validate(pk);
  return pk;
}

std::string private_key_to_json(const PrivateKey& sk) {
  json doc = {{"lambda", to_hex(sk.lambda)},
              {"mu", to_hex(sk.mu)},
              {"n", to_hex(sk.n)}};
  return doc.dump(2) + "\n";
}

PrivateKey private_key_from_json(std::string_view text) {
  const json doc = parse_object(text);
  PrivateKey sk;
  sk.lambda = field(doc, "lambda");
  sk.mu = field(doc, "mu");
  sk.n = field(doc, "n");
  return sk;
}

}  // namespace fedshield::paillier
