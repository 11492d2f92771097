#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace regionsel {

// Root of every error thrown by the library. The CLI maps subclasses to exit
// codes: validation-like errors -> 2, IoError -> 3, anything else -> 4.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes that do not fit together (kernel larger than image, patch outside
// bounds, tensor shape mismatch).
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A value violates a documented invariant (even kernel side, negative
// weight, empty dataset, bad config field).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed file contents. Carries the byte offset where parsing failed.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A file could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// The serialized model container is unreadable (magic, version, checksum,
// truncation).
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

// Input carries no usable signal for a solver (e.g. all-zero gradients).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// An external kernel estimator timed out, crashed, or produced bad output.
class EstimatorError : public Error {
 public:
  using Error::Error;
};

// Ratio with a zero denominator in the error-ratio metric.
class DegenerateDenominatorError : public Error {
 public:
  using Error::Error;
};

}  // namespace regionsel
