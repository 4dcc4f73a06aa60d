#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "fedshield/paillier.hpp"

// Message boundary between the poisoning-defense server, which forwards the
// ciphertexts of benign clients, and the aggregation server, which only ever
// sees ciphertexts and the public key.
namespace fedshield::transport {

struct Submission {
  std::size_t client_id = 0;
  paillier::CipherVector ciphertexts;
};

struct AggregationRequest {
  paillier::PublicKey public_key;
  std::vector<Submission> submissions;
};

struct AggregationResponse {
  paillier::CipherVector ciphertexts;
};

// JSON with lowercase hex integers:
//   request  {"n": h, "g": h, "submissions": [{"client_id": i, "ciphertexts": [h, ...]}]}
//   response {"ciphertexts": [h, ...]}
std::string encode_request(const AggregationRequest& request);
AggregationRequest decode_request(std::string_view body);
std::string encode_response(const AggregationResponse& response);
AggregationResponse decode_response(std::string_view body);

// Aggregation server role: the encrypted average of all submissions.
AggregationResponse aggregate(const AggregationRequest& request);
// Wire-level handler: request body in, response body out.
std::string handle(std::string_view request_body);

class Channel {
 public:
  virtual ~Channel() = default;
  virtual AggregationResponse send(const AggregationRequest& request) = 0;
};

// Serializes across the boundary without leaving the process.
class InProcessChannel final : public Channel {
 public:
  AggregationResponse send(const AggregationRequest& request) override;
};

// Serves the aggregation role over HTTP on 127.0.0.1 (POST /aggregate) from a
// background thread, and posts to it.
class TcpChannel final : public Channel {
 public:
  TcpChannel();
  ~TcpChannel() override;
  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  int port() const noexcept;
  AggregationResponse send(const AggregationRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class Kind { kInProcess, kTcp };
std::unique_ptr<Channel> make_channel(Kind kind);

}  // namespace fedshield::transport
