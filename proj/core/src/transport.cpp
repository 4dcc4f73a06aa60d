#include "fedshield/transport.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "fedshield/errors.hpp"
#include "fedshield/key_io.hpp"

namespace fedshield::transport {

using nlohmann::json;

namespace {

json hex_array(const paillier::CipherVector& v) {
  json out = json::array();
  for (const auto& c : v) out.push_back(paillier::to_hex(c.value()));
  return out;
}

paillier::CipherVector cipher_array(const json& arr) {
  if (!arr.is_array()) throw ParseError("expected an array of ciphertexts", 0);
  paillier::CipherVector out;
  out.reserve(arr.size());
  for (const auto& h : arr) {
    if (!h.is_string()) throw ParseError("ciphertext is not a hex string", 0);
    out.emplace_back(paillier::from_hex(h.get<std::string>()));
  }
  return out;
}

json parse(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ParseError("aggregation message is not a JSON object", 0);
  }
  return doc;
}

}  // namespace

std::string encode_request(const AggregationRequest& request) {
  json doc;
  doc["n"] = paillier::to_hex(request.public_key.n);
  doc["g"] = paillier::to_hex(request.public_key.g);
  json subs = json::array();
  for (const auto& s : request.submissions) {
    subs.push_back({{"client_id", s.client_id}, {"ciphertexts", hex_array(s.ciphertexts)}});
  }
  doc["submissions"] = std::move(subs);
  return doc.dump();
}

AggregationRequest decode_request(std::string_view body) {
  const json doc = parse(body);
  if (!doc.contains("n") || !doc.contains("g") || !doc.contains("submissions")) {
    throw ParseError("aggregation request lacks n, g or submissions", 0);
  }
  AggregationRequest request;
  request.public_key.n = paillier::from_hex(doc["n"].get<std::string>());
  request.public_key.g = paillier::from_hex(doc["g"].get<std::string>());
  request.public_key.n_squared = request.public_key.n * request.public_key.n;
  paillier::validate(request.public_key);
  for (const auto& s : doc["submissions"]) {
    request.submissions.push_back(
        {s.at("client_id").get<std::size_t>(), cipher_array(s.at("ciphertexts"))});
  }
  return request;
}

std::string encode_response(const AggregationResponse& response) {
  json doc;
  doc["ciphertexts"] = hex_array(response.ciphertexts);
  return doc.dump();
}

AggregationResponse decode_response(std::string_view body) {
  const json doc = parse(body);
  if (!doc.contains("ciphertexts")) {
    throw ParseError("aggregation response lacks ciphertexts", 0);
  }
  return {cipher_array(doc["ciphertexts"])};
}

AggregationResponse aggregate(const AggregationRequest& request) {
  if (request.submissions.empty()) {
    throw AggregationError("empty quorum: no benign submissions to aggregate");
  }
  std::vector<paillier::CipherVector> inputs;
  inputs.reserve(request.submissions.size());
  for (const auto& s : request.submissions) inputs.push_back(s.ciphertexts);
  return {paillier::aggregate_average(request.public_key, inputs)};
}

std::string handle(std::string_view request_body) {
  return encode_response(aggregate(decode_request(request_body)));
}

AggregationResponse InProcessChannel::send(const AggregationRequest& request) {
  return decode_response(handle(encode_request(request)));
}

struct TcpChannel::Impl {
  httplib::Server server;
  std::thread worker;
  int port = -1;
};

TcpChannel::TcpChannel() : impl_(std::make_unique<Impl>()) {
  impl_->server.Post("/aggregate", [](const httplib::Request& req,
                                      httplib::Response& res) {
    try {
      res.set_content(handle(req.body), "application/json");
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(e.what(), "text/plain");
    }
  });
  impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  if (impl_->port < 0) throw Error("cannot bind aggregation server on 127.0.0.1");
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

TcpChannel::~TcpChannel() {
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

int TcpChannel::port() const noexcept { return impl_->port; }

AggregationResponse TcpChannel::send(const AggregationRequest& request) {
  httplib::Client client("127.0.0.1", impl_->port);
  client.set_read_timeout(600, 0);
  auto res = client.Post("/aggregate", encode_request(request), "application/json");
  if (!res) throw Error("aggregation server unreachable");
  if (res->status != 200) {
    throw AggregationError("aggregation server rejected request: " + res->body);
  }
  return decode_response(res->body);
}

std::unique_ptr<Channel> make_channel(Kind kind) {
  if (kind == Kind::kTcp) return std::make_unique<TcpChannel>();
  return std::make_unique<InProcessChannel>();
}

}  // namespace fedshield::transport
