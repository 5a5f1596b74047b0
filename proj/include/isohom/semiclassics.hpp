#pragma once

#include <vector>

#include "isohom/common.hpp"
#include "isohom/planewave.hpp"
#include "isohom/weyl.hpp"

namespace isohom {

/// U = exp(-i t M / hbar) on a plane-wave basis, from the eigendecomposition of M.
struct Propagator {
  Real hbar = 0.0;
  Real t = 0.0;
  PlaneWaveBasis basis{1, 0};
  ComplexMatrix U;
  Real unitarity_defect = 0.0;  // ||U^* U - I||_max
};

Propagator propagate(const ComplexMatrix& m, const PlaneWaveBasis& basis, Real hbar, Real t);
Propagator propagate(const HamiltonianMatrix& m, Real t);
Propagator propagate(const WeylMatrix& m, Real t);

/// Rows and columns with |k|_inf <= inner of a matrix on the basis of cutoff K.
ComplexMatrix interior_block(const ComplexMatrix& m, const PlaneWaveBasis& basis, int inner);

struct EgorovOptions {
  Real flow_step = 1e-3;
  /// Quadrature points per axis for the flowed symbol; 0 picks 8 K' + 8 for the interior cutoff K'.
  int quadrature_points = 0;
};

/// || U^* Op(a) U - Op(a o phi^t) || on the interior block |k|_inf <= K/2, where phi^t is
/// the forward Hamiltonian flow of b and U = exp(-i t Op(b) / hbar).
Real egorov_residual(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b, Real t, Real hbar, int cutoff,
                     const EgorovOptions& opts = {});

/// K(hbar) = min(cap, ceil(scale / hbar^exponent) * multiple).
struct EgorovCutoffRule {
  Real scale = 8.0;
  Real exponent = 0.5;
  int multiple = 4;
  int cap = 64;
  int cutoff(Real hbar) const;
};

inline constexpr Real kExactResidual = 1e-8;

struct EgorovReport {
  Real t = 0.0;
  std::vector<Real> hbar;
  std::vector<int> cutoffs;
  std::vector<Real> residual;
  /// log r ~ slope log hbar + log constant; NaN when the residuals are exact.
  Real slope = 0.0;
  Real constant = 0.0;
  bool exact = false;  // every residual <= 1e-8
};

EgorovReport egorov_scaling(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b, Real t,
                            const std::vector<Real>& hbars, const EgorovCutoffRule& rule = {},
                            const EgorovOptions& opts = {}, int jobs = 1);

/// || (i/hbar)[Op b, Op a] - Op({b, a}) || on the interior block |k|_inf <= K/2.
Real moyal_defect(const PhaseSpaceFunction& b, const PhaseSpaceFunction& a, Real hbar, int cutoff);

/// Least-squares slope and intercept of log y against log x.
struct LogLogFit {
  Real slope = 0.0;
  Real constant = 0.0;
};
LogLogFit loglog_fit(const std::vector<Real>& x, const std::vector<Real>& y);

}  // namespace isohom
