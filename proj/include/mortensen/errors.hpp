#pragma once

#include <stdexcept>
#include <string>

namespace mortensen {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: dimension mismatch, bad config field, grid mismatch.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A solver did not reach its tolerance (Newton, CG, Picard, Riccati).
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

// Non-finite values appeared while time stepping.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int step) : Error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

// Data or iterates left the configured trust region, or negative curvature
// was met where the reduced problem should be strictly convex.
class TrustRegionError : public Error {
 public:
  using Error::Error;
};

// A Hessian lost its coercivity margin, so it cannot be used as an observer
// gain or a Newton matrix.
class CoercivityLossError : public Error {
 public:
  CoercivityLossError(const std::string& what, double margin)
      : Error(what), margin_(margin) {}
  double margin() const { return margin_; }

 private:
  double margin_;
};

// 0 success, 2 validation, 3 solver failure, 4 coercivity loss.
int exit_code(const std::exception& e);

}  // namespace mortensen
