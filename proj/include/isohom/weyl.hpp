#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "isohom/common.hpp"
#include "isohom/planewave.hpp"
#include "isohom/torus.hpp"

namespace isohom {

/// A phase-space symbol b(x, eta) on T^n x R^n.
///
/// Carries a declared x-bandwidth Q (the x-Fourier transform vanishes for
/// |q|_inf > Q; kUnbounded when unknown) and, optionally, a closed-form
/// x-Fourier transform b^(q, eta) = (2pi)^-n int e^{-iq.y} b(y, eta) dy and a
/// closed-form phase-space gradient. Mechanical symbols 1/2|eta|^2 + V also
/// remember their potential so solvers can take exact fast paths.
class PhaseSpaceFunction {
 public:
  static constexpr int kUnbounded = -1;

  using Evaluator = std::function<Complex(const RealVector& x, const RealVector& eta)>;
  using FourierEvaluator = std::function<Complex(const Frequency& q, const RealVector& eta)>;
  /// Writes d/dx and d/deta of the real part.
  using GradientEvaluator =
      std::function<void(const RealVector& x, const RealVector& eta, RealVector& dx, RealVector& deta)>;

  PhaseSpaceFunction(int dim, Evaluator f, int bandwidth, bool real_valued);

  PhaseSpaceFunction& with_fourier(FourierEvaluator ft);
  PhaseSpaceFunction& with_gradient(GradientEvaluator grad);
  PhaseSpaceFunction& with_mechanical_potential(FourierPotential pot);

  int dim() const { return dim_; }
  int bandwidth() const { return bandwidth_; }
  bool is_band_limited() const { return bandwidth_ != kUnbounded; }
  bool is_real() const { return real_; }

  Complex operator()(const RealVector& x, const RealVector& eta) const { return f_(x, eta); }
  Real real_value(const RealVector& x, const RealVector& eta) const { return f_(x, eta).real(); }

  bool has_fourier() const { return static_cast<bool>(ft_); }
  Complex fourier(const Frequency& q, const RealVector& eta) const;

  bool has_gradient() const { return static_cast<bool>(grad_); }
  /// Closed-form gradient when available, otherwise central differences with step 1e-6.
  void gradient(const RealVector& x, const RealVector& eta, RealVector& dx, RealVector& deta) const;

  /// Set when the symbol is exactly 1/2|eta|^2 + V(x).
  const std::optional<FourierPotential>& mechanical_potential() const { return mech_; }

  friend PhaseSpaceFunction operator+(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b);
  friend PhaseSpaceFunction operator*(Complex s, const PhaseSpaceFunction& a);

 private:
  int dim_;
  Evaluator f_;
  int bandwidth_;
  bool real_;
  FourierEvaluator ft_;
  GradientEvaluator grad_;
  std::optional<FourierPotential> mech_;
};

PhaseSpaceFunction constant_symbol(int dim, Complex value);
/// 1/2 |eta|^2
PhaseSpaceFunction kinetic_symbol(int dim);
/// V(x), independent of eta.
PhaseSpaceFunction potential_symbol(const FourierPotential& pot);
/// H(x, eta) = 1/2 |eta|^2 + V(x)
PhaseSpaceFunction mechanical_symbol(const FourierPotential& pot);
/// <c, eta>
PhaseSpaceFunction linear_momentum_symbol(const RealVector& c);

/// Smooth compactly supported bump exp(1 - 1/(1 - (r/R)^2)) for r = |eta| < R, 1 at 0.
Real smooth_bump(Real r, Real radius = 1.0);
Real smooth_bump_derivative(Real r, Real radius = 1.0);

/// X(x) * g(|eta|) with X a trigonometric polynomial and g a radial profile.
PhaseSpaceFunction separable_symbol(const FourierPotential& xpart, std::function<Real(Real)> profile,
                                    std::function<Real(Real)> profile_derivative);
/// X(x) * smooth_bump(|eta|, radius)
PhaseSpaceFunction bump_symbol(const FourierPotential& xpart, Real radius = 1.0);

/// Polynomial-in-eta times trigonometric-in-x symbol:
/// sum_t coef_t exp(i q_t.x) prod_i eta_i^{p_ti}.
struct SymbolTerm {
  Frequency q;
  std::vector<int> eta_powers;
  Complex coefficient;
};
PhaseSpaceFunction polynomial_symbol(int dim, std::vector<SymbolTerm> terms);

/// {b, a} = d_eta b . d_x a - d_x b . d_eta a for real symbols, from their gradients.
PhaseSpaceFunction poisson_bracket(const PhaseSpaceFunction& b, const PhaseSpaceFunction& a);

/// Toroidal Weyl quantization restricted to a plane-wave basis.
struct WeylMatrix {
  Real hbar;
  PlaneWaveBasis basis;
  ComplexMatrix entries;
};

struct WeylOptions {
  /// Quadrature points per axis for symbols without a closed-form transform;
  /// 0 picks max(4Q + 4, 4K + 4) for band-limited and 8K + 8 for unbounded symbols.
  int quadrature_points = 0;
};

/// entry(j, m) = b^(j - m, hbar (j + m) / 2). Requires K >= Q.
WeylMatrix weyl_matrix(const PhaseSpaceFunction& b, Real hbar, int cutoff, const WeylOptions& opts = {});

/// Wigner transform of psi = sum_k c_k e_k on the lattice eta = hbar kappa / 2,
/// |kappa|_inf <= 2K:  W(x, kappa) = (2pi)^-n sum_{k + l = kappa} c_k conj(c_l) e^{i(k-l).x}.
struct WignerTable {
  Real hbar = 0.0;
  int dim = 0;
  int cutoff = 0;                 // basis cutoff K; kappa runs over |kappa|_inf <= 2K
  int resolution = 0;             // x grid points per axis
  std::vector<Frequency> kappas;  // lexicographic
  RealMatrix values;              // rows: x grid points, cols: kappas
  Real max_imag = 0.0;            // largest discarded imaginary part

  /// sum_eta int W dx, equal to ||psi||^2.
  Real total_mass() const;
};

WignerTable wigner_transform(const ComplexVector& psi, const PlaneWaveBasis& basis, Real hbar,
                             int resolution);

/// sum_eta int b(x, eta) W(x, eta) dx by trapezoidal quadrature; equals <Op(b) psi, psi>.
Complex wigner_pairing(const PhaseSpaceFunction& b, const WignerTable& w, Real hbar);

/// Weyl matrix whose symbol is a tabulated Wigner function (symbol defined on the lattice only).
ComplexMatrix weyl_matrix_of_wigner(const WignerTable& w);

/// || (2pi)^n Op(W phi) psi - <phi, psi> phi ||, where <phi, psi> = sum conj(phi_k) psi_k.
/// The (2pi)^n converts the Wigner function to the normalized-measure symbol of the projector.
Real projector_check(const ComplexVector& phi, const ComplexVector& psi, const PlaneWaveBasis& basis,
                     Real hbar);

/// psi^* M psi
template <typename Derived, typename VecDerived>
Complex quadratic_form(const Eigen::MatrixBase<Derived>& m, const Eigen::MatrixBase<VecDerived>& psi) {
  return psi.dot(m * psi);
}

/// Number of x-derivatives M(n) of the torus Calderon-Vaillancourt bound.
int cv_order(int n);
/// 2^{n+1}/(n+2) pi^{(3n-1)/2} / Gamma((n+1)/2)
Real cv_constant(int n);

using MultiIndex = std::vector<int>;
/// Constant times sum_{|alpha| <= 2M} ||d_x^alpha b||_inf; rejects incomplete norm tables.
Real cv_bound(const std::map<MultiIndex, Real>& sup_norms, int n);

/// ||d_x^alpha b||_inf for |alpha| <= 2M(n), sampled on an x grid and the given eta
/// points; derivatives are exact from the closed-form transform.
std::map<MultiIndex, Real> symbol_derivative_norms(const PhaseSpaceFunction& b,
                                                   const std::vector<RealVector>& eta_samples,
                                                   int resolution = 64);

struct NormEstimate {
  Real norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value by power iteration on M^* M from a seeded random start.
NormEstimate operator_norm(const ComplexMatrix& m, Real rel_tol = 1e-10, int max_iterations = 100000,
                           unsigned long seed = 42);

}  // namespace isohom
