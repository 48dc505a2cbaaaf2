#pragma once

#include <stdexcept>
#include <string>

namespace romforge {

/// Malformed or inconsistent input data (files, manifests, dimensions).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical operation could not be carried out (singular, non-SPD, no convergence).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller misuse: bad arguments, wrong model kind, invalid configuration.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace romforge
