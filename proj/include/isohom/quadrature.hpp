#pragma once

#include <functional>
#include <vector>

#include "isohom/common.hpp"

namespace isohom {

struct QuadratureResult {
  Real value = 0.0;
  Real error_estimate = 0.0;
  int evaluations = 0;
};

/// Globally adaptive 15-point Gauss-Kronrod integration of f over [a, b].
/// Breakpoints (kinks, square-root zeros) may be given to split the range first.
QuadratureResult integrate(const std::function<Real(Real)>& f, Real a, Real b,
                           Real abs_tol = 1e-12, Real rel_tol = 1e-12,
                           const std::vector<Real>& breakpoints = {}, int max_intervals = 2000);

}  // namespace isohom
