// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef BNPTVP_ERROR_HPP
#define BNPTVP_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bnptvp {

/// Parameters or configuration violate a documented invariant.
class InvalidParameters : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or a probability normalization failed numerically.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Posterior precision matrix is not positive definite.
class SingularPrecision : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Malformed input data. Row and column are 1-based; 0 means "not applicable".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", column " +
                           std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Persisted draws do not agree with their manifest (shape, version, missing file).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bnptvp

#endif  // BNPTVP_ERROR_HPP
