#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedshield {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Mismatched dimensions between models, parameter vectors or histograms.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid user configuration; surfaced by the CLI with exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CryptoError : public Error {
 public:
  using Error::Error;
};

class InvalidCiphertextError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

// The modulus is too small for the requested operation.
class DegenerateKeyError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

// Prime search exhausted its attempt budget; retrying with another seed is
// expected to succeed.
class KeygenRetryError : public CryptoError {
 public:
  using CryptoError::CryptoError;
};

// A metric whose denominator vanished.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : Error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// Secure aggregation failed: empty quorum or fixed-point overflow.
class AggregationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace fedshield
