#pragma once

#include <stdexcept>
#include <string>

namespace slicevol {

// Root of every error raised by the library. Subclasses map one-to-one onto
// the failure categories callers are expected to distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A documented precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf reached a tensor.
class NumericError : public Error {
 public:
  using Error::Error;
};

class DegenerateEmbeddingError : public Error {
 public:
  using Error::Error;
};

class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

class DecodeError : public Error {
 public:
  using Error::Error;
};

class HeaderError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

class TruncationError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

class ShapeError : public DecodeError {
 public:
  using DecodeError::DecodeError;
};

}  // namespace slicevol
