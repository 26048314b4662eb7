#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace schoenbat {

// Root of every exception the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Bad sizes or parameters (zero dimensions, p <= 1, non-positive epsilon...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// An argument lies outside a kernel's domain of convergence.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double radius,
              std::optional<std::pair<std::size_t, std::size_t>> where = std::nullopt)
      : Error(what), radius_(radius), where_(where) {}

  double radius() const { return radius_; }
  // (query row, key row) of the offending logit, when raised by attention.
  const std::optional<std::pair<std::size_t, std::size_t>>& where() const { return where_; }

 private:
  double radius_;
  std::optional<std::pair<std::size_t, std::size_t>> where_;
};

// Series evaluation stopped at max_terms before meeting its tolerance.
class TruncationError : public Error {
 public:
  TruncationError(const std::string& what, double partial, std::size_t terms)
      : Error(what), partial_(partial), terms_(terms) {}

  double partial_value() const { return partial_; }
  std::size_t terms() const { return terms_; }

 private:
  double partial_;
  std::size_t terms_;
};

// An attention row whose normalizer vanished.
class DegenerateError : public Error {
 public:
  DegenerateError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Overflow or another non-finite intermediate.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  // 1-based line of the offending text, 0 when not tied to a location.
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace schoenbat
