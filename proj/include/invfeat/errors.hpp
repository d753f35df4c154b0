#pragma once

#include <stdexcept>
#include <string>

namespace invfeat {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad call: mismatched dimensions, invalid flag values, k > n, and the like.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An exact oracle was asked for a size it refuses (factorial blowup).
class SizeLimitError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

/// Input lies in (or cannot be distinguished from) a measure-zero degenerate
/// set: rank-deficient identifiers, tied k-means norms, zero clouds.
class BadSetError : public Error {
 public:
  using Error::Error;
};

/// Alias used where the spec speaks of "degenerate input" rather than bad set.
class DegenerateInputError : public BadSetError {
 public:
  using BadSetError::BadSetError;
};

/// Mathematically invalid input: non-real-rooted coefficients, coincident nuclei.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Low-rank completion failed (singular corner, inconsistent blocks).
class ReconstructionError : public Error {
 public:
  using Error::Error;
};

/// Text input could not be parsed; message carries the line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Runtime numerical failure (NaN loss, divergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace invfeat
