#pragma once

#include <stdexcept>
#include <string>

namespace affine_cdo {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative loss level, psi <= 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Query outside a tabulated grid; no extrapolation is performed.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Riccati coefficients exceeded the overflow guard.
class ExplosionError : public Error {
 public:
  ExplosionError(const std::string& what, double tau) : Error(what), tau_(tau) {}
  double tau() const noexcept { return tau_; }

 private:
  double tau_;
};

/// Mean-reversion speeds sit on a manifold where the closed-form moments degenerate.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A quantity is undefined for the given state: zero jump intensity, zero hedge denominator,
/// zero unhedged volatility, degenerate scenario weights.
class UndefinedError : public Error {
 public:
  using Error::Error;
};

/// Tranche has no remaining notional or no remaining coupons, so its spread is undefined.
class WipedOutError : public UndefinedError {
 public:
  using UndefinedError::UndefinedError;
};

/// Misaligned series or matrix dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra or likelihood evaluation broke down.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CalibrationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; carries the 1-based line number (0 when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace affine_cdo
