#pragma once

#include <stdexcept>
#include <string>

namespace bfi {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Adaptive quadrature did not reach the requested tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double best_estimate, double error_estimate)
      : Error(what), best_estimate_(best_estimate), error_estimate_(error_estimate) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double best_estimate_;
  double error_estimate_;
};

/// Root bracket without a sign change.
class NoSignChange : public Error {
 public:
  using Error::Error;
};

/// Conditioning a density on a region carrying (numerically) no mass.
class DegenerateConditioning : public Error {
 public:
  using Error::Error;
};

/// The probability assigned to H_S is below the admissible floor P_f(H_S).
class AlphaBelowFloor : public Error {
 public:
  AlphaBelowFloor(const std::string& what, double alpha, double floor)
      : Error(what), alpha_(alpha), floor_(floor) {}

  double alpha() const noexcept { return alpha_; }
  double floor() const noexcept { return floor_; }

 private:
  double alpha_;
  double floor_;
};

/// Malformed or incoherent analysis configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace bfi
