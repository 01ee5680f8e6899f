#pragma once

#include <stdexcept>
#include <string>

namespace mewfit {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw data whose X or Y values span a zero-width interval.
class DegenerateRange : public Error {
 public:
  using Error::Error;
};

/// Input that violates a type invariant (non-finite values, too few points,
/// adapted values outside the unit square, ...).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DegreeTooHigh : public Error {
 public:
  using Error::Error;
};

/// The weighted support is too thin for the requested degree.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// The prescribed mean squared error is outside the open interval
/// (min e_i^2, max e_i^2) of the current residuals.
class InfeasibleTarget : public Error {
 public:
  using Error::Error;
};

class UnknownScenario : public Error {
 public:
  using Error::Error;
};

/// Malformed CSV or PGM input. `line()` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0, const std::string& source = {})
      : Error(format(what, line, source)), message_(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(const std::string& what, std::size_t line, const std::string& source) {
    std::string head = source;
    if (line) head += (head.empty() ? "line " : ":") + std::to_string(line);
    return head.empty() ? what : head + ": " + what;
  }

  std::string message_;
  std::size_t line_;
};

}  // namespace mewfit
