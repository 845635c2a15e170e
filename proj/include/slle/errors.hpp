#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace slle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch, out-of-range argument, non-finite input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Operation requested for the wrong prior mode (full vs spherical).
class WrongMode : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class NotPositiveSemidefinite : public Error {
 public:
  using Error::Error;
};

/// Singular systems, eigensolver failures, non-finite intermediate values.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Line and column are 1-based; 0 means "not applicable".
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(what), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace slle
