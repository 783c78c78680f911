#pragma once

#include <stdexcept>
#include <string>

namespace mixact {

// Base error for everything the engine throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shape disagreement (dimensions that cannot be combined).
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad user-supplied configuration: flags, config file, layer geometry.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable, malformed, or missing dataset files.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required (e.g. NaN loss).
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace mixact
