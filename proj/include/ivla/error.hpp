#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ivla {

// Base for every error raised by the library. CLI exit codes are derived
// from the concrete type (see tools/ivla.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A pivot or a Sherman-Morrison denominator fell below tolerance. `index` is
// the failing pivot (inversion) or the failing update step (rank-1 chain).
class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, std::size_t index)
      : Error(what), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

// Invalid configuration: unbound dimension, bad model/strategy combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (matrix files, update streams).
class DataError : public Error {
 public:
  using Error::Error;
};

// A kernel produced a NaN or infinity.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace ivla
