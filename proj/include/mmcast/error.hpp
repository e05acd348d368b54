#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mmcast {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Iterative or linear-algebra failure.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A density whose mass on [0,1] is too small to renormalize, or a fitted
/// model with nothing left in it.
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input data that violates an ingestion invariant (range, ordering, constant column).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text; carries the 1-based line number.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace mmcast
