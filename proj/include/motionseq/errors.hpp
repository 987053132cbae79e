#pragma once

#include <stdexcept>
#include <string>

namespace motionseq {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside an operation's domain (bad shape, out-of-range index, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Malformed data file.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Run configuration inconsistent with the data or the model.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf produced by a numeric op.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace motionseq
