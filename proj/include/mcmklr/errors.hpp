#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mcmklr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Vector or matrix shapes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Inputs that are well-formed but violate a precondition (labels, ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A dense operation was asked to materialize more than its cap allows.
class CapExceededError : public Error {
 public:
  using Error::Error;
};

/// Training produced non-finite values or a singular system.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed dataset text. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Malformed or truncated model file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace mcmklr
