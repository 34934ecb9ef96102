#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace fibersys {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ChartMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyFiber : public Error {
 public:
  using Error::Error;
};

class FiberedProductViolation : public Error {
 public:
  using Error::Error;
};

class LogBranchError : public Error {
 public:
  using Error::Error;
};

// A least-squares re-expression in a Lie algebra basis left a residual above
// the gate; the value does not lie in the span it was expected to lie in.
class BasisProjectionError : public Error {
 public:
  BasisProjectionError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class CocycleViolation : public Error {
 public:
  CocycleViolation(const std::string& what, double residual, Eigen::VectorXd worst)
      : Error(what + " (residual " + std::to_string(residual) + ")"),
        residual_(residual),
        worst_(std::move(worst)) {}
  double residual() const { return residual_; }
  const Eigen::VectorXd& worst_sample() const { return worst_; }

 private:
  double residual_;
  Eigen::VectorXd worst_;
};

// Thrown by the integrators when a trajectory leaves its domain or exceeds the
// blow-up bound. Carries the last time at which the state was still valid.
// This is how incompleteness is observed, it is not a programming error.
class EscapeDetected : public Error {
 public:
  EscapeDetected(double time, Eigen::VectorXd last_state)
      : Error("trajectory escaped at t=" + std::to_string(time)),
        time_(time),
        last_state_(std::move(last_state)) {}
  double time() const { return time_; }
  const Eigen::VectorXd& last_state() const { return last_state_; }

 private:
  double time_;
  Eigen::VectorXd last_state_;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// Names the violated invariant, e.g. ValidationError("jacobi", ...).
class ValidationError : public Error {
 public:
  ValidationError(std::string invariant, const std::string& detail)
      : Error("validation failed [" + invariant + "]: " + detail), invariant_(std::move(invariant)) {}
  const std::string& invariant() const { return invariant_; }

 private:
  std::string invariant_;
};

}  // namespace fibersys
