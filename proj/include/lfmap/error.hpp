#pragma once

#include <stdexcept>
#include <string>

namespace lfmap {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Every weight collapsed to zero, so no distribution can be formed.
class DegenerateWeights : public Error {
 public:
  using Error::Error;
};

/// The proposal has zero density somewhere the prior does not.
class SupportViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed or corrupted file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InvalidArgument(message);
  }
}

}  // namespace detail
}  // namespace lfmap
