#pragma once

#include <stdexcept>
#include <string>

namespace cascnn {

// Shape or axis mismatch between tensors. The message names the offending axis.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value (bad window sizes, missing options, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (station out of range, bad counts, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally broken input file (missing header, wrong column count, ...).
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Value outside the mathematical domain of an operation.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric failure at runtime (divergence, NaN loss, impossible metric).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// API misuse (backward on a non-scalar, reading an undefined tensor, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A mask that keeps zero cells; the sample cannot contribute to the loss.
class DegenerateMaskError : public DataError {
 public:
  using DataError::DataError;
};

// A metric scope that contains no evaluated cells.
class EmptyScopeError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace cascnn
