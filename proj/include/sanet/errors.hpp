#pragma once

#include <stdexcept>
#include <string>

namespace sanet {

/// Invalid configuration: bad hyperparameters, kernel/direction family
/// mismatch, invalid convolution geometry.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shape or dimension mismatch.
class DimensionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data: out-of-range labels, unsorted event streams,
/// bad coordinates.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable or corrupt file container (bad magic, truncated payload).
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

/// Numerical failure: non-finite loss, undefined metrics.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated API contract (caller bug), e.g. backward on a non-scalar loss.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace sanet
