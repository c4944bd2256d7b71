#pragma once

#include <stdexcept>
#include <string>

namespace wmid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Token id outside the vocabulary.
class InvalidContextError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Detector needs something the client cannot provide (e.g. logits).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string raw_payload)
      : Error(what), raw_payload_(std::move(raw_payload)) {}
  const std::string& raw_payload() const { return raw_payload_; }

 private:
  std::string raw_payload_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace wmid
