#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pvi {

// Bad argument: dimension mismatch, empty sample set, invalid config values.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside a function's mathematical domain (e.g. log of xi <= 0).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Linear algebra failure, e.g. Cholesky still failing at maximum jitter.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Request outside what an implementation supports (quadrature above 2-D).
class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A model lacks an optional capability, e.g. z-gradients.
class CapabilityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Label value not covered by a dataset schema.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public IoError {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : IoError(what + " (line " + std::to_string(line) + ", column " +
                std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace pvi
