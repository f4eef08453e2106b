#pragma once

#include <stdexcept>
#include <string>

namespace pilot {

/// Raised when an input violates a documented precondition or invariant
/// (bad configuration, out-of-range parameter, shape mismatch).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when persisted data is missing, truncated or inconsistent.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pilot
