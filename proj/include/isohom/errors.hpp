#pragma once

#include <stdexcept>
#include <string>

namespace isohom {

/// Rejected input: precondition or schema violation.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The basis cutoff does not resolve the requested energy.
class CutoffError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// An iterative solver or integrator failed to reach its target.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : std::runtime_error(what), last_residual_(last_residual) {}
  double last_residual() const noexcept { return last_residual_; }

 private:
  double last_residual_;
};

/// A trajectory left the momentum box |p| <= 1e3 guarded by the integrators.
class FlowEscapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace isohom
