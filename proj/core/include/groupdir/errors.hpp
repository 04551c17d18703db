#pragma once

#include <stdexcept>

namespace groupdir {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or argument values (bad ranges, group counts,
// non-positive hyperparameters). Maps to CLI exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Runtime data violates an operation's domain: labels out of range,
// shape mismatches, zero-norm embeddings, degenerate densities.
class DataError : public Error {
 public:
  using Error::Error;
};

// Filesystem and parse failures.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace groupdir
