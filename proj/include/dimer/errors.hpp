#pragma once

#include <stdexcept>
#include <string>

namespace dimer {

/// Raised when a numerical routine cannot deliver its contract
/// (eigensolver breakdown, step underflow, series too long, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for invalid user-facing parameters and malformed configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dimer
