#pragma once

#include <map>
#include <string>

#include "isohom/common.hpp"

namespace isohom {

/// A point of the flat torus T^n = (R / 2pi Z)^n, coordinates reduced to [0, 2pi).
class TorusPoint {
 public:
  explicit TorusPoint(RealVector x);
  TorusPoint(std::initializer_list<Real> coords);

  int dim() const { return static_cast<int>(x_.size()); }
  const RealVector& coords() const { return x_; }
  Real operator[](int i) const { return x_[i]; }

 private:
  RealVector x_;
};

/// Reduce a real number modulo 2pi into [0, 2pi).
Real wrap_angle(Real a);

/// Real trigonometric polynomial V(x) = sum_q c_q exp(i q.x) on T^n.
///
/// Coefficients are Hermitian-symmetric (c_{-q} = conj(c_q)), so V is real.
/// Construction validates the symmetry; zero coefficients are dropped.
class FourierPotential {
 public:
  using CoefficientMap = std::map<Frequency, Complex>;

  explicit FourierPotential(int dim);
  FourierPotential(int dim, CoefficientMap coeffs);

  int dim() const { return dim_; }
  /// Largest |q|_inf with a nonzero coefficient (0 for constants).
  int bandwidth() const;
  const CoefficientMap& coefficients() const { return coeffs_; }
  Complex coefficient(const Frequency& q) const;
  Real mean() const { return coefficient(Frequency(dim_, 0)).real(); }
  /// sum_{q != 0} |c_q|, an upper bound for sup |V - mean|.
  Real oscillation_bound() const;
  /// sum_q |c_q|, an upper bound for sup |V|.
  Real sup_bound() const;
  bool is_zero() const { return coeffs_.empty(); }

  /// Gradient of V at x (length dim).
  RealVector gradient(const RealVector& x) const;
  RealMatrix hessian(const RealVector& x) const;

  friend FourierPotential operator+(const FourierPotential& a, const FourierPotential& b);
  friend FourierPotential operator*(Real s, const FourierPotential& a);

 private:
  int dim_;
  CoefficientMap coeffs_;
};

/// amplitude * cos(q.x)
FourierPotential cosine_mode(const Frequency& q, Real amplitude = 1.0);
/// amplitude * sin(q.x)
FourierPotential sine_mode(const Frequency& q, Real amplitude = 1.0);
FourierPotential constant_potential(int dim, Real value);

Real eval_potential(const FourierPotential& pot, const RealVector& x);
Real eval_potential(const FourierPotential& pot, const TorusPoint& x);

struct ExtremaReport {
  Real min_value = 0.0;
  Real max_value = 0.0;
  TorusPoint argmin{0.0};
  TorusPoint argmax{0.0};
  int grid_resolution = 0;
};

/// Extrema over the uniform grid with res points per axis (res >= 8).
ExtremaReport potential_extrema(const FourierPotential& pot, int res);

/// Newton-polished extrema starting from a grid scan; used where max V enters
/// formulas that need more than grid accuracy.
ExtremaReport refined_extrema(const FourierPotential& pot, int res = 256);

/// V'(x) = V(x + a).
FourierPotential translate(const FourierPotential& pot, const TorusPoint& a);
/// V'(x) = V(-x).
FourierPotential reflect(const FourierPotential& pot);

}  // namespace isohom
