#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crnem {

/// Bad input: malformed files, violated preconditions, inconsistent shapes.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical or algebraic procedure could not produce a valid result.
class MathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exact integer value does not fit the requested machine type.
class OverflowError : public MathError {
 public:
  using MathError::MathError;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : ValidationError(what + " at line " + std::to_string(line) +
                        ", column " + std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace crnem
