#pragma once

#include <stdexcept>
#include <string>

namespace tracext {

// Bad input data (malformed files, invariant-violating tables, mismatched sizes).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Caller violated a documented precondition (r <= 0, tau < 1, theta <= 0, ...).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace tracext
