#include "isohom/torus.hpp"

#include <cmath>
#include <limits>

#include "isohom/errors.hpp"

namespace isohom {

std::vector<Frequency> frequency_box(int dim, int bound) {
  if (dim < 1) throw ValidationError("frequency_box: dimension must be >= 1");
  if (bound < 0) throw ValidationError("frequency_box: negative bound");
  std::vector<Frequency> out;
  Frequency q(dim, -bound);
  while (true) {
    out.push_back(q);
    int axis = dim - 1;
    while (axis >= 0 && q[axis] == bound) {
      q[axis] = -bound;
      --axis;
    }
    if (axis < 0) break;
    ++q[axis];
  }
  return out;
}

RealMatrix torus_grid(int dim, int res) {
  if (dim < 1 || res < 1) throw ValidationError("torus_grid: bad dimension or resolution");
  long total = 1;
  for (int i = 0; i < dim; ++i) total *= res;
  RealMatrix pts(total, dim);
  const Real step = kTwoPi / res;
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int axis = dim - 1; axis >= 0; --axis) {
      pts(idx, axis) = step * static_cast<Real>(rem % res);
      rem /= res;
    }
  }
  return pts;
}

Real wrap_angle(Real a) {
  Real r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

TorusPoint::TorusPoint(RealVector x) : x_(std::move(x)) {
  if (x_.size() < 1) throw ValidationError("TorusPoint: dimension must be >= 1");
  for (Eigen::Index i = 0; i < x_.size(); ++i) x_[i] = wrap_angle(x_[i]);
}

TorusPoint::TorusPoint(std::initializer_list<Real> coords)
    : TorusPoint(RealVector::Map(coords.begin(), static_cast<Eigen::Index>(coords.size()))) {}

namespace {

constexpr Real kHermitianTol = 1e-12;

void check_frequency(int dim, const Frequency& q) {
  if (static_cast<int>(q.size()) != dim)
    throw ValidationError("FourierPotential: frequency dimension mismatch");
}

}  // namespace

FourierPotential::FourierPotential(int dim) : dim_(dim) {
  if (dim < 1) throw ValidationError("FourierPotential: dimension must be >= 1");
}

FourierPotential::FourierPotential(int dim, CoefficientMap coeffs) : FourierPotential(dim) {
  for (auto& [q, c] : coeffs) {
    check_frequency(dim, q);
    if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
      throw ValidationError("FourierPotential: non-finite coefficient");
  }
  for (const auto& [q, c] : coeffs) {
    const Frequency mq = negate(q);
    auto it = coeffs.find(mq);
    const Complex partner = it == coeffs.end() ? Complex(0.0) : it->second;
    const Real scale = std::max({1.0, std::abs(c), std::abs(partner)});
    if (std::abs(partner - std::conj(c)) > kHermitianTol * scale)
      throw ValidationError("FourierPotential: coefficients are not Hermitian-symmetric");
  }
  for (auto& [q, c] : coeffs) {
    if (c == Complex(0.0)) continue;
    if (sup_norm(q) == 0) c = Complex(c.real(), 0.0);
    coeffs_.emplace(q, c);
  }
}

int FourierPotential::bandwidth() const {
  int b = 0;
  for (const auto& [q, c] : coeffs_) b = std::max(b, sup_norm(q));
  return b;
}

Complex FourierPotential::coefficient(const Frequency& q) const {
  auto it = coeffs_.find(q);
  return it == coeffs_.end() ? Complex(0.0) : it->second;
}

Real FourierPotential::oscillation_bound() const {
  Real s = 0.0;
  for (const auto& [q, c] : coeffs_)
    if (sup_norm(q) != 0) s += std::abs(c);
  return s;
}

Real FourierPotential::sup_bound() const {
  Real s = 0.0;
  for (const auto& [q, c] : coeffs_) s += std::abs(c);
  return s;
}

RealVector FourierPotential::gradient(const RealVector& x) const {
  RealVector g = RealVector::Zero(dim_);
  for (const auto& [q, c] : coeffs_) {
    const Complex term = Complex(0.0, 1.0) * c * std::polar(1.0, dot(q, x));
    for (int i = 0; i < dim_; ++i) g[i] += q[i] * term.real();
  }
  return g;
}

RealMatrix FourierPotential::hessian(const RealVector& x) const {
  RealMatrix h = RealMatrix::Zero(dim_, dim_);
  for (const auto& [q, c] : coeffs_) {
    const Real term = -(c * std::polar(1.0, dot(q, x))).real();
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) h(i, j) += q[i] * q[j] * term;
  }
  return h;
}

FourierPotential operator+(const FourierPotential& a, const FourierPotential& b) {
  if (a.dim_ != b.dim_) throw ValidationError("FourierPotential: dimension mismatch in sum");
  FourierPotential::CoefficientMap m = a.coeffs_;
  for (const auto& [q, c] : b.coeffs_) m[q] += c;
  return FourierPotential(a.dim_, std::move(m));
}

FourierPotential operator*(Real s, const FourierPotential& a) {
  FourierPotential::CoefficientMap m;
  for (const auto& [q, c] : a.coeffs_) m[q] = s * c;
  return FourierPotential(a.dim_, std::move(m));
}

FourierPotential cosine_mode(const Frequency& q, Real amplitude) {
  const int dim = static_cast<int>(q.size());
  if (sup_norm(q) == 0) return constant_potential(dim, amplitude);
  return FourierPotential(dim, {{q, 0.5 * amplitude}, {negate(q), 0.5 * amplitude}});
}

FourierPotential sine_mode(const Frequency& q, Real amplitude) {
  const int dim = static_cast<int>(q.size());
  if (sup_norm(q) == 0) return FourierPotential(dim);
  // sin(t) = (e^{it} - e^{-it}) / 2i
  return FourierPotential(dim, {{q, Complex(0.0, -0.5 * amplitude)},
                                {negate(q), Complex(0.0, 0.5 * amplitude)}});
}

FourierPotential constant_potential(int dim, Real value) {
  return FourierPotential(dim, {{Frequency(dim, 0), Complex(value)}});
}

Real eval_potential(const FourierPotential& pot, const RealVector& x) {
  if (x.size() != pot.dim()) throw ValidationError("eval_potential: dimension mismatch");
  Complex s = 0.0;
  for (const auto& [q, c] : pot.coefficients()) s += c * std::polar(1.0, dot(q, x));
  return s.real();
}

Real eval_potential(const FourierPotential& pot, const TorusPoint& x) {
  return eval_potential(pot, x.coords());
}

ExtremaReport potential_extrema(const FourierPotential& pot, int res) {
  if (res < 8) throw ValidationError("potential_extrema: resolution must be >= 8");
  const RealMatrix grid = torus_grid(pot.dim(), res);
  Real vmin = std::numeric_limits<Real>::infinity();
  Real vmax = -vmin;
  Eigen::Index imin = 0, imax = 0;
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const Real v = eval_potential(pot, RealVector(grid.row(i).transpose()));
    if (v < vmin) {
      vmin = v;
      imin = i;
    }
    if (v > vmax) {
      vmax = v;
      imax = i;
    }
  }
  ExtremaReport r;
  r.min_value = vmin;
  r.max_value = vmax;
  r.argmin = TorusPoint(RealVector(grid.row(imin).transpose()));
  r.argmax = TorusPoint(RealVector(grid.row(imax).transpose()));
  r.grid_resolution = res;
  return r;
}

namespace {

// Newton iteration on grad V = 0 from a grid seed; keeps the seed if Newton
// leaves the basin or worsens the value.
RealVector polish(const FourierPotential& pot, RealVector x, bool maximize) {
  const Real sign = maximize ? 1.0 : -1.0;
  Real best = sign * eval_potential(pot, x);
  for (int it = 0; it < 50; ++it) {
    const RealVector g = pot.gradient(x);
    if (g.norm() < 1e-15) break;
    const RealMatrix h = pot.hessian(x);
    Eigen::LDLT<RealMatrix> ldlt(h);
    if (ldlt.info() != Eigen::Success) break;
    const RealVector step = ldlt.solve(g);
    if (!step.allFinite() || step.norm() > 0.5) break;
    const RealVector trial = x - step;
    const Real val = sign * eval_potential(pot, trial);
    if (val < best - 1e-15) break;
    x = trial;
    best = val;
    if (step.norm() < 1e-14) break;
  }
  return x;
}

}  // namespace

ExtremaReport refined_extrema(const FourierPotential& pot, int res) {
  ExtremaReport r = potential_extrema(pot, res);
  if (pot.bandwidth() == 0) return r;
  const RealVector xmax = polish(pot, r.argmax.coords(), true);
  const RealVector xmin = polish(pot, r.argmin.coords(), false);
  r.max_value = std::max(r.max_value, eval_potential(pot, xmax));
  r.min_value = std::min(r.min_value, eval_potential(pot, xmin));
  r.argmax = TorusPoint(xmax);
  r.argmin = TorusPoint(xmin);
  return r;
}

FourierPotential translate(const FourierPotential& pot, const TorusPoint& a) {
  if (a.dim() != pot.dim()) throw ValidationError("translate: dimension mismatch");
  FourierPotential::CoefficientMap m;
  for (const auto& [q, c] : pot.coefficients()) m[q] = c * std::polar(1.0, dot(q, a.coords()));
  return FourierPotential(pot.dim(), std::move(m));
}

FourierPotential reflect(const FourierPotential& pot) {
  FourierPotential::CoefficientMap m;
  for (const auto& [q, c] : pot.coefficients()) m[negate(q)] = c;
  return FourierPotential(pot.dim(), std::move(m));
}

}  // namespace isohom
