#pragma once

#include <stdexcept>
#include <string>

namespace asag {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or configuration: malformed records, dangling references,
// out-of-range values. Maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Retryable backend failure (timeout, connection reset, rate limit after
// backoff exhaustion). Maps to CLI exit code 2.
class TransportError : public Error {
 public:
  using Error::Error;
};

// Authorization failure; never retried. Maps to CLI exit code 2.
class AuthError : public Error {
 public:
  using Error::Error;
};

}  // namespace asag
