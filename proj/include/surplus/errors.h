#ifndef SURPLUS_ERRORS_H_
#define SURPLUS_ERRORS_H_

#include <stdexcept>
#include <string>

namespace surplus {

// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

// Invalid configuration or input data.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

// Problem too large for exact enumeration.
class SizeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "size"; }
};

// Operation not available for this model kind.
class UnsupportedError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsupported"; }
};

// Failure talking to an external learner process. what() carries the
// transcript of the exchange that led to the failure.
class ProtocolError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "protocol"; }
};

}  // namespace surplus

#endif  // SURPLUS_ERRORS_H_
