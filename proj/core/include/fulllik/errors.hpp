#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fulllik {

/// Root of every exception thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the mathematical domain of an operation
/// (e.g. a transform inverse outside its codomain, alpha outside [0, 3]).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Data-conditioned parameters have no value for unseen rows.
class UnsupportedAtInference : public Error {
 public:
  using Error::Error;
};

class InvalidState : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row, std::size_t column)
      : Error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
        row_(row),
        column_(column) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Optimization produced a non-finite loss or gradient.
class Diverged : public Error {
 public:
  Diverged(const std::string& what, std::size_t last_finite_step, double last_finite_loss)
      : Error(what + " (last finite step " + std::to_string(last_finite_step) + ")"),
        last_finite_step_(last_finite_step),
        last_finite_loss_(last_finite_loss) {}

  std::size_t last_finite_step() const noexcept { return last_finite_step_; }
  double last_finite_loss() const noexcept { return last_finite_loss_; }

 private:
  std::size_t last_finite_step_;
  double last_finite_loss_;
};

}  // namespace fulllik
