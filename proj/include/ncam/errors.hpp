#pragma once

#include <stdexcept>
#include <string>

namespace ncam {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied arguments (dimensions, fault specs, ranges).
struct ValidationError : Error {
  using Error::Error;
};

// Structural problems in input files (ragged rows, empty files).
struct FormatError : Error {
  using Error::Error;
};

// A cell that failed to parse as a number.
struct ParseError : Error {
  using Error::Error;
};

// Conforming-dimension violations between matrices/models.
struct ShapeError : Error {
  using Error::Error;
};

// Degenerate numeric input (constant column, all-equal KDE samples,
// all-zero spectrum).
struct DegenerateError : Error {
  using Error::Error;
};

// Training produced a non-finite loss.
struct DivergenceError : Error {
  using Error::Error;
};

// Too few samples for a covariance-based fit.
struct InsufficientSamplesError : Error {
  using Error::Error;
};

}  // namespace ncam
