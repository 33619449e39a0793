#pragma once

#include <stdexcept>
#include <string>

namespace gradsamp {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Smallest Gram eigenvalue below tolerance: the (sub)sample design is
// rank-deficient for the requested solve.
struct SingularGram : Error {
  using Error::Error;
};

// A Poisson draw selected zero rows.
struct EmptyDraw : Error {
  using Error::Error;
};

// All per-row gradients vanish, so no sampling distribution exists.
struct DegenerateGradients : Error {
  using Error::Error;
};

// A row has zero sampling probability but a nonzero contribution.
struct DivisionByZeroProb : Error {
  using Error::Error;
};

// Malformed text input; carries 1-based line and column of the offence.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what + " (line " + std::to_string(line) + ", column " +
              std::to_string(column) + ")"),
        line(line),
        column(column) {}
  std::size_t line;
  std::size_t column;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

// More than half of an experiment cell's replications failed.
struct ExcessiveFailures : Error {
  using Error::Error;
};

}  // namespace gradsamp
