// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace sentirisk {

/// Tensor shapes do not fit the operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input data (files, samples, configs, probability vectors) failed validation.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Training or inference produced a non-finite value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A checkpoint could not be read back.
class CheckpointError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace sentirisk
