#pragma once

#include <stdexcept>
#include <string>

namespace intent {

// Error taxonomy shared by every module. The CLI maps ConfigError to exit
// code 2 and InputError / DataError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Arguments outside the mathematical domain of an operation (log of a
// non-positive number, NaN thresholds, degenerate fits).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent inputs: shape mismatches, bad records.
class InputError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable files referenced by a manifest or command.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid hyperparameters or experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf produced during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace intent
