#pragma once

#include <stdexcept>

namespace preval {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of the operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A parameter is outside its admissible range (lambda <= 0, empty grid, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, failed factorizations, diverging optimizers.
class NumericError : public Error {
 public:
  using Error::Error;
};

// The input carries no usable signal (zero design matrix, rank 0).
class DegenerateInputError : public NumericError {
 public:
  using NumericError::NumericError;
};

// Malformed files, missing columns, unknown labels.
class DataError : public Error {
 public:
  using Error::Error;
};

// A class has fewer members than the requested number of folds.
class StratificationError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace preval
