#pragma once

#include <stdexcept>
#include <string>

namespace ssmamba {

// Programming errors: shape mismatches, violated preconditions.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Bad user-supplied input: dates, CSV rows, embedding files.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values observed in checked mode.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The finite-difference oracle could not produce a trustworthy answer.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ssmamba
