#include "isohom/weyl.hpp"

#include <cmath>
#include <random>

#include "isohom/errors.hpp"

namespace isohom {

namespace {

constexpr Complex kI(0.0, 1.0);

Real eta_power(const RealVector& eta, const std::vector<int>& powers) {
  Real p = 1.0;
  for (std::size_t i = 0; i < powers.size(); ++i)
    p *= std::pow(eta[static_cast<Eigen::Index>(i)], powers[i]);
  return p;
}

long ipow(long base, int e) {
  long r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Offset of a frequency inside the lexicographic box |q|_inf <= bound.
long box_offset(const Frequency& q, int bound) {
  long idx = 0;
  for (int v : q) idx = idx * (2 * bound + 1) + (v + bound);
  return idx;
}

// Trapezoidal x-Fourier coefficients (2pi)^-n int e^{-iq.y} f(y) dy for |q|_inf <= qmax,
// from samples on the torus_grid(dim, points) ordering, one axis at a time.
ComplexVector grid_fourier(const ComplexVector& samples, int dim, int points, int qmax) {
  const int width = 2 * qmax + 1;
  std::vector<int> shape(static_cast<std::size_t>(dim), points);
  ComplexVector cur = samples;
  // Per-axis phase table: phase(q + qmax, j) = e^{-i q x_j} / points.
  ComplexMatrix phase(width, points);
  for (int q = -qmax; q <= qmax; ++q)
    for (int j = 0; j < points; ++j)
      phase(q + qmax, j) = std::polar(1.0 / points, -kTwoPi * q * j / points);
  for (int axis = 0; axis < dim; ++axis) {
    long outer = 1, inner = 1;
    for (int a = 0; a < axis; ++a) outer *= shape[static_cast<std::size_t>(a)];
    for (int a = axis + 1; a < dim; ++a) inner *= shape[static_cast<std::size_t>(a)];
    ComplexVector next = ComplexVector::Zero(outer * width * inner);
    for (long o = 0; o < outer; ++o)
      for (int q = 0; q < width; ++q)
        for (int j = 0; j < points; ++j) {
          const Complex w = phase(q, j);
          const long src = (o * points + j) * inner;
          const long dst = (o * width + q) * inner;
          for (long i = 0; i < inner; ++i) next[dst + i] += w * cur[src + i];
        }
    cur.swap(next);
    shape[static_cast<std::size_t>(axis)] = width;
  }
  return cur;
}

// b^(q, eta) for all |q|_inf <= qmax, box-ordered.
ComplexVector fourier_table(const PhaseSpaceFunction& b, const RealVector& eta, int qmax, int points,
                            const RealMatrix& grid) {
  const int dim = b.dim();
  if (b.has_fourier()) {
    const auto qs = frequency_box(dim, qmax);
    ComplexVector out(static_cast<Eigen::Index>(qs.size()));
    for (std::size_t i = 0; i < qs.size(); ++i) out[static_cast<Eigen::Index>(i)] = b.fourier(qs[i], eta);
    return out;
  }
  ComplexVector samples(grid.rows());
  for (Eigen::Index i = 0; i < grid.rows(); ++i) samples[i] = b(RealVector(grid.row(i).transpose()), eta);
  return grid_fourier(samples, dim, points, qmax);
}

int default_points(const PhaseSpaceFunction& b, int cutoff) {
  if (b.is_band_limited()) return std::max(4 * b.bandwidth() + 4, 4 * cutoff + 4);
  return 8 * cutoff + 8;
}

}  // namespace

PhaseSpaceFunction::PhaseSpaceFunction(int dim, Evaluator f, int bandwidth, bool real_valued)
    : dim_(dim), f_(std::move(f)), bandwidth_(bandwidth), real_(real_valued) {
  if (dim < 1) throw ValidationError("PhaseSpaceFunction: dimension must be >= 1");
  if (!f_) throw ValidationError("PhaseSpaceFunction: empty evaluator");
  if (bandwidth < kUnbounded) throw ValidationError("PhaseSpaceFunction: invalid bandwidth");
}

PhaseSpaceFunction& PhaseSpaceFunction::with_fourier(FourierEvaluator ft) {
  ft_ = std::move(ft);
  return *this;
}

PhaseSpaceFunction& PhaseSpaceFunction::with_gradient(GradientEvaluator grad) {
  grad_ = std::move(grad);
  return *this;
}

PhaseSpaceFunction& PhaseSpaceFunction::with_mechanical_potential(FourierPotential pot) {
  if (pot.dim() != dim_) throw ValidationError("PhaseSpaceFunction: potential dimension mismatch");
  mech_ = std::move(pot);
  return *this;
}

Complex PhaseSpaceFunction::fourier(const Frequency& q, const RealVector& eta) const {
  if (static_cast<int>(q.size()) != dim_) throw ValidationError("fourier: frequency dimension mismatch");
  if (ft_) return ft_(q, eta);
  if (is_band_limited() && sup_norm(q) > bandwidth_) return 0.0;
  const int points = is_band_limited() ? 4 * bandwidth_ + 4 : std::max(64, 4 * sup_norm(q) + 4);
  const RealMatrix grid = torus_grid(dim_, points);
  Complex s = 0.0;
  for (Eigen::Index i = 0; i < grid.rows(); ++i) {
    const RealVector y = grid.row(i).transpose();
    s += std::polar(1.0, -dot(q, y)) * f_(y, eta);
  }
  return s / static_cast<Real>(grid.rows());
}

void PhaseSpaceFunction::gradient(const RealVector& x, const RealVector& eta, RealVector& dx,
                                  RealVector& deta) const {
  dx.resize(dim_);
  deta.resize(dim_);
  if (grad_) {
    grad_(x, eta, dx, deta);
    return;
  }
  constexpr Real h = 1e-6;
  for (int i = 0; i < dim_; ++i) {
    RealVector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    dx[i] = (real_value(xp, eta) - real_value(xm, eta)) / (2 * h);
    RealVector ep = eta, em = eta;
    ep[i] += h;
    em[i] -= h;
    deta[i] = (real_value(x, ep) - real_value(x, em)) / (2 * h);
  }
}

PhaseSpaceFunction operator+(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b) {
  if (a.dim_ != b.dim_) throw ValidationError("PhaseSpaceFunction: dimension mismatch in sum");
  const int bw = (a.is_band_limited() && b.is_band_limited()) ? std::max(a.bandwidth_, b.bandwidth_)
                                                              : PhaseSpaceFunction::kUnbounded;
  PhaseSpaceFunction s(
      a.dim_, [fa = a.f_, fb = b.f_](const RealVector& x, const RealVector& e) { return fa(x, e) + fb(x, e); },
      bw, a.real_ && b.real_);
  if (a.ft_ && b.ft_)
    s.ft_ = [fa = a.ft_, fb = b.ft_](const Frequency& q, const RealVector& e) { return fa(q, e) + fb(q, e); };
  if (a.grad_ && b.grad_)
    s.grad_ = [ga = a.grad_, gb = b.grad_](const RealVector& x, const RealVector& e, RealVector& dx,
                                          RealVector& de) {
      RealVector dx2(dx.size()), de2(de.size());
      ga(x, e, dx, de);
      gb(x, e, dx2, de2);
      dx += dx2;
      de += de2;
    };
  return s;
}

PhaseSpaceFunction operator*(Complex c, const PhaseSpaceFunction& a) {
  const bool real = a.real_ && c.imag() == 0.0;
  PhaseSpaceFunction s(
      a.dim_, [c, f = a.f_](const RealVector& x, const RealVector& e) { return c * f(x, e); }, a.bandwidth_,
      real);
  if (a.ft_) s.ft_ = [c, f = a.ft_](const Frequency& q, const RealVector& e) { return c * f(q, e); };
  if (a.grad_ && real)
    s.grad_ = [r = c.real(), g = a.grad_](const RealVector& x, const RealVector& e, RealVector& dx,
                                         RealVector& de) {
      g(x, e, dx, de);
      dx *= r;
      de *= r;
    };
  return s;
}

PhaseSpaceFunction constant_symbol(int dim, Complex value) {
  PhaseSpaceFunction b(
      dim, [value](const RealVector&, const RealVector&) { return value; }, 0, value.imag() == 0.0);
  b.with_fourier([value](const Frequency& q, const RealVector&) {
    return sup_norm(q) == 0 ? value : Complex(0.0);
  });
  b.with_gradient([](const RealVector&, const RealVector&, RealVector& dx, RealVector& de) {
    dx.setZero();
    de.setZero();
  });
  return b;
}

PhaseSpaceFunction kinetic_symbol(int dim) {
  PhaseSpaceFunction b(
      dim, [](const RealVector&, const RealVector& e) { return Complex(0.5 * e.squaredNorm()); }, 0, true);
  b.with_fourier([](const Frequency& q, const RealVector& e) {
    return sup_norm(q) == 0 ? Complex(0.5 * e.squaredNorm()) : Complex(0.0);
  });
  b.with_gradient([](const RealVector&, const RealVector& e, RealVector& dx, RealVector& de) {
    dx.setZero();
    de = e;
  });
  return b;
}

PhaseSpaceFunction potential_symbol(const FourierPotential& pot) {
  PhaseSpaceFunction b(
      pot.dim(), [pot](const RealVector& x, const RealVector&) { return Complex(eval_potential(pot, x)); },
      pot.bandwidth(), true);
  b.with_fourier([pot](const Frequency& q, const RealVector&) { return pot.coefficient(q); });
  b.with_gradient([pot](const RealVector& x, const RealVector&, RealVector& dx, RealVector& de) {
    dx = pot.gradient(x);
    de.setZero();
  });
  return b;
}

PhaseSpaceFunction mechanical_symbol(const FourierPotential& pot) {
  PhaseSpaceFunction b = kinetic_symbol(pot.dim()) + potential_symbol(pot);
  b.with_mechanical_potential(pot);
  return b;
}

PhaseSpaceFunction linear_momentum_symbol(const RealVector& c) {
  const int dim = static_cast<int>(c.size());
  PhaseSpaceFunction b(
      dim, [c](const RealVector&, const RealVector& e) { return Complex(c.dot(e)); }, 0, true);
  b.with_fourier([c](const Frequency& q, const RealVector& e) {
    return sup_norm(q) == 0 ? Complex(c.dot(e)) : Complex(0.0);
  });
  b.with_gradient([c](const RealVector&, const RealVector&, RealVector& dx, RealVector& de) {
    dx.setZero();
    de = c;
  });
  return b;
}

Real smooth_bump(Real r, Real radius) {
  if (radius <= 0.0) throw ValidationError("smooth_bump: radius must be positive");
  const Real s = std::abs(r) / radius;
  if (s >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - s * s));
}

Real smooth_bump_derivative(Real r, Real radius) {
  if (radius <= 0.0) throw ValidationError("smooth_bump: radius must be positive");
  const Real s = r / radius;
  if (std::abs(s) >= 1.0) return 0.0;
  const Real d = 1.0 - s * s;
  return smooth_bump(r, radius) * (-2.0 * s / (d * d)) / radius;
}

PhaseSpaceFunction separable_symbol(const FourierPotential& xpart, std::function<Real(Real)> profile,
                                    std::function<Real(Real)> profile_derivative) {
  if (!profile || !profile_derivative) throw ValidationError("separable_symbol: empty profile");
  PhaseSpaceFunction b(
      xpart.dim(),
      [xpart, profile](const RealVector& x, const RealVector& e) {
        return Complex(eval_potential(xpart, x) * profile(e.norm()));
      },
      xpart.bandwidth(), true);
  b.with_fourier([xpart, profile](const Frequency& q, const RealVector& e) {
    return xpart.coefficient(q) * profile(e.norm());
  });
  b.with_gradient([xpart, profile, profile_derivative](const RealVector& x, const RealVector& e,
                                                       RealVector& dx, RealVector& de) {
    const Real r = e.norm();
    const Real g = profile(r);
    dx = g * xpart.gradient(x);
    if (r == 0.0) {
      de.setZero();
    } else {
      de = (eval_potential(xpart, x) * profile_derivative(r) / r) * e;
    }
  });
  return b;
}

PhaseSpaceFunction bump_symbol(const FourierPotential& xpart, Real radius) {
  if (radius <= 0.0) throw ValidationError("bump_symbol: radius must be positive");
  return separable_symbol(
      xpart, [radius](Real r) { return smooth_bump(r, radius); },
      [radius](Real r) { return smooth_bump_derivative(r, radius); });
}

PhaseSpaceFunction polynomial_symbol(int dim, std::vector<SymbolTerm> terms) {
  if (dim < 1) throw ValidationError("polynomial_symbol: dimension must be >= 1");
  int bw = 0;
  std::map<std::pair<Frequency, std::vector<int>>, Complex> merged;
  for (const auto& t : terms) {
    if (static_cast<int>(t.q.size()) != dim || static_cast<int>(t.eta_powers.size()) != dim)
      throw ValidationError("polynomial_symbol: term dimension mismatch");
    for (int p : t.eta_powers)
      if (p < 0) throw ValidationError("polynomial_symbol: negative eta power");
    if (!std::isfinite(t.coefficient.real()) || !std::isfinite(t.coefficient.imag()))
      throw ValidationError("polynomial_symbol: non-finite coefficient");
    merged[{t.q, t.eta_powers}] += t.coefficient;
  }
  std::vector<SymbolTerm> clean;
  bool real = true;
  for (const auto& [key, c] : merged) {
    if (c == Complex(0.0)) continue;
    clean.push_back({key.first, key.second, c});
    bw = std::max(bw, sup_norm(key.first));
    auto it = merged.find({negate(key.first), key.second});
    const Complex partner = it == merged.end() ? Complex(0.0) : it->second;
    if (std::abs(partner - std::conj(c)) > 1e-12 * std::max(1.0, std::abs(c))) real = false;
  }
  PhaseSpaceFunction b(
      dim,
      [clean](const RealVector& x, const RealVector& e) {
        Complex s = 0.0;
        for (const auto& t : clean) s += t.coefficient * std::polar(1.0, dot(t.q, x)) * eta_power(e, t.eta_powers);
        return s;
      },
      bw, real);
  b.with_fourier([clean](const Frequency& q, const RealVector& e) {
    Complex s = 0.0;
    for (const auto& t : clean)
      if (t.q == q) s += t.coefficient * eta_power(e, t.eta_powers);
    return s;
  });
  b.with_gradient([clean, dim](const RealVector& x, const RealVector& e, RealVector& dx, RealVector& de) {
    dx.setZero();
    de.setZero();
    for (const auto& t : clean) {
      const Complex w = t.coefficient * std::polar(1.0, dot(t.q, x));
      const Real mono = eta_power(e, t.eta_powers);
      for (int i = 0; i < dim; ++i) {
        dx[i] += (kI * static_cast<Real>(t.q[static_cast<std::size_t>(i)]) * w * mono).real();
        const int p = t.eta_powers[static_cast<std::size_t>(i)];
        if (p == 0) continue;
        std::vector<int> lowered = t.eta_powers;
        --lowered[static_cast<std::size_t>(i)];
        de[i] += (w * static_cast<Real>(p) * eta_power(e, lowered)).real();
      }
    }
  });
  return b;
}

PhaseSpaceFunction poisson_bracket(const PhaseSpaceFunction& b, const PhaseSpaceFunction& a) {
  if (a.dim() != b.dim()) throw ValidationError("poisson_bracket: dimension mismatch");
  if (!a.is_real() || !b.is_real()) throw ValidationError("poisson_bracket: symbols must be real-valued");
  const int bw = (a.is_band_limited() && b.is_band_limited()) ? a.bandwidth() + b.bandwidth()
                                                              : PhaseSpaceFunction::kUnbounded;
  return PhaseSpaceFunction(
      a.dim(),
      [a, b](const RealVector& x, const RealVector& e) {
        RealVector ax, ae, bx, be;
        a.gradient(x, e, ax, ae);
        b.gradient(x, e, bx, be);
        return Complex(be.dot(ax) - bx.dot(ae));
      },
      bw, true);
}

WeylMatrix weyl_matrix(const PhaseSpaceFunction& b, Real hbar, int cutoff, const WeylOptions& opts) {
  if (!(hbar > 0.0 && hbar <= 1.0)) throw ValidationError("weyl_matrix: hbar must lie in (0, 1]");
  if (cutoff < 0) throw ValidationError("weyl_matrix: negative cutoff");
  if (b.is_band_limited() && cutoff < b.bandwidth())
    throw ValidationError("weyl_matrix: cutoff smaller than symbol bandwidth");
  const int dim = b.dim();
  PlaneWaveBasis basis(dim, cutoff);
  const Eigen::Index n = basis.size();
  ComplexMatrix entries = ComplexMatrix::Zero(n, n);
  const int qmax = b.is_band_limited() ? std::min(b.bandwidth(), 2 * cutoff) : 2 * cutoff;

  int points = opts.quadrature_points > 0 ? opts.quadrature_points : default_points(b, cutoff);
  if (!b.has_fourier() && b.is_band_limited() && points < 4 * b.bandwidth() + 4)
    throw ValidationError("weyl_matrix: quadrature grid too coarse for the symbol bandwidth");
  if (!b.has_fourier() && points < 2 * qmax + 1)
    throw ValidationError("weyl_matrix: quadrature grid cannot resolve the needed frequencies");
  const RealMatrix grid = b.has_fourier() ? RealMatrix() : torus_grid(dim, points);

  // Entries sharing kappa = j + m share eta = hbar kappa / 2.
  for (const Frequency& kappa : frequency_box(dim, 2 * cutoff)) {
    RealVector eta(dim);
    for (int i = 0; i < dim; ++i) eta[i] = 0.5 * hbar * kappa[static_cast<std::size_t>(i)];
    ComplexVector table;
    bool have_table = false;
    for (Eigen::Index jj = 0; jj < n; ++jj) {
      const Frequency& j = basis[jj];
      Frequency m(static_cast<std::size_t>(dim));
      Frequency q(static_cast<std::size_t>(dim));
      bool inside = true;
      for (int i = 0; i < dim; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        m[ui] = kappa[ui] - j[ui];
        q[ui] = j[ui] - m[ui];
        if (std::abs(m[ui]) > cutoff || std::abs(q[ui]) > qmax) inside = false;
      }
      if (!inside) continue;
      if (!have_table) {
        table = fourier_table(b, eta, qmax, points, grid);
        have_table = true;
      }
      const auto mm = basis.index_of(m);
      entries(jj, *mm) = table[box_offset(q, qmax)];
    }
  }
  return {hbar, std::move(basis), std::move(entries)};
}

Real WignerTable::total_mass() const {
  const Real cell = std::pow(kTwoPi / resolution, dim);
  return values.sum() * cell;
}

WignerTable wigner_transform(const ComplexVector& psi, const PlaneWaveBasis& basis, Real hbar, int resolution) {
  if (!(hbar > 0.0 && hbar <= 1.0)) throw ValidationError("wigner_transform: hbar must lie in (0, 1]");
  if (resolution < 1) throw ValidationError("wigner_transform: resolution must be >= 1");
  if (psi.size() != basis.size()) throw ValidationError("wigner_transform: coefficient length mismatch");
  if (psi.norm() > 1.0 + 1e-12) throw ValidationError("wigner_transform: state norm exceeds 1");
  const int dim = basis.dim();
  const int cutoff = basis.cutoff();

  WignerTable w;
  w.hbar = hbar;
  w.dim = dim;
  w.cutoff = cutoff;
  w.resolution = resolution;
  w.kappas = frequency_box(dim, 2 * cutoff);
  const long npts = ipow(resolution, dim);
  w.values = RealMatrix::Zero(npts, static_cast<Eigen::Index>(w.kappas.size()));

  // phase(axis)(d + 2K, j) = e^{i d x_j}
  const int dwidth = 4 * cutoff + 1;
  ComplexMatrix phase(dwidth, resolution);
  for (int d = -2 * cutoff; d <= 2 * cutoff; ++d)
    for (int j = 0; j < resolution; ++j) phase(d + 2 * cutoff, j) = std::polar(1.0, kTwoPi * d * j / resolution);
  const Real norm = std::pow(kTwoPi, -dim);

  std::vector<int> xi(static_cast<std::size_t>(dim));
  for (std::size_t kc = 0; kc < w.kappas.size(); ++kc) {
    const Frequency& kappa = w.kappas[kc];
    // k + l = kappa, d = k - l
    std::vector<std::pair<Frequency, Complex>> terms;
    for (Eigen::Index kk = 0; kk < basis.size(); ++kk) {
      const Frequency& k = basis[kk];
      Frequency l(static_cast<std::size_t>(dim)), d(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        l[ui] = kappa[ui] - k[ui];
        d[ui] = k[ui] - l[ui];
      }
      const auto li = basis.index_of(l);
      if (!li) continue;
      const Complex c = psi[kk] * std::conj(psi[*li]);
      if (c != Complex(0.0)) terms.emplace_back(std::move(d), c);
    }
    if (terms.empty()) continue;
    for (long p = 0; p < npts; ++p) {
      long rem = p;
      for (int axis = dim - 1; axis >= 0; --axis) {
        xi[static_cast<std::size_t>(axis)] = static_cast<int>(rem % resolution);
        rem /= resolution;
      }
      Complex s = 0.0;
      for (const auto& [d, c] : terms) {
        Complex e = c;
        for (int i = 0; i < dim; ++i) {
          const auto ui = static_cast<std::size_t>(i);
          e *= phase(d[ui] + 2 * cutoff, xi[ui]);
        }
        s += e;
      }
      s *= norm;
      w.values(p, static_cast<Eigen::Index>(kc)) = s.real();
      w.max_imag = std::max(w.max_imag, std::abs(s.imag()));
    }
  }
  return w;
}

Complex wigner_pairing(const PhaseSpaceFunction& b, const WignerTable& w, Real hbar) {
  if (hbar != w.hbar) throw ValidationError("wigner_pairing: hbar differs from the Wigner table");
  if (b.dim() != w.dim) throw ValidationError("wigner_pairing: dimension mismatch");
  const RealMatrix grid = torus_grid(w.dim, w.resolution);
  const Real cell = std::pow(kTwoPi / w.resolution, w.dim);
  Complex s = 0.0;
  for (std::size_t kc = 0; kc < w.kappas.size(); ++kc) {
    const auto col = static_cast<Eigen::Index>(kc);
    if (w.values.col(col).isZero(0.0)) continue;
    RealVector eta(w.dim);
    for (int i = 0; i < w.dim; ++i) eta[i] = 0.5 * hbar * w.kappas[kc][static_cast<std::size_t>(i)];
    for (Eigen::Index p = 0; p < grid.rows(); ++p)
      s += b(RealVector(grid.row(p).transpose()), eta) * w.values(p, col);
  }
  return s * cell;
}

ComplexMatrix weyl_matrix_of_wigner(const WignerTable& w) {
  if (w.resolution < 4 * w.cutoff + 1)
    throw ValidationError("weyl_matrix_of_wigner: resolution must be at least 4K + 1");
  const int dim = w.dim;
  const int cutoff = w.cutoff;
  PlaneWaveBasis basis(dim, cutoff);
  const Eigen::Index n = basis.size();
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  const int qmax = 2 * cutoff;
  for (std::size_t kc = 0; kc < w.kappas.size(); ++kc) {
    const auto col = static_cast<Eigen::Index>(kc);
    const ComplexVector table = grid_fourier(w.values.col(col).cast<Complex>(), dim, w.resolution, qmax);
    const Frequency& kappa = w.kappas[kc];
    for (Eigen::Index jj = 0; jj < n; ++jj) {
      const Frequency& j = basis[jj];
      Frequency m(static_cast<std::size_t>(dim)), q(static_cast<std::size_t>(dim));
      for (int i = 0; i < dim; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        m[ui] = kappa[ui] - j[ui];
        q[ui] = j[ui] - m[ui];
      }
      const auto mm = basis.index_of(m);
      if (mm) out(jj, *mm) = table[box_offset(q, qmax)];
    }
  }
  return out;
}

Real projector_check(const ComplexVector& phi, const ComplexVector& psi, const PlaneWaveBasis& basis, Real hbar) {
  if (phi.size() != basis.size() || psi.size() != basis.size())
    throw ValidationError("projector_check: coefficient length mismatch");
  if (phi.norm() > 1.0 + 1e-12) throw ValidationError("projector_check: phi norm exceeds 1");
  const WignerTable w = wigner_transform(phi, basis, hbar, 4 * basis.cutoff() + 1);
  const ComplexMatrix op = weyl_matrix_of_wigner(w);
  const ComplexVector lhs = std::pow(kTwoPi, basis.dim()) * (op * psi);
  const ComplexVector rhs = phi.dot(psi) * phi;
  return (lhs - rhs).norm();
}

int cv_order(int n) {
  if (n < 1) throw ValidationError("cv_order: dimension must be >= 1");
  return n % 2 == 0 ? n / 2 + 1 : (n + 1) / 2 + 1;
}

Real cv_constant(int n) {
  if (n < 1) throw ValidationError("cv_constant: dimension must be >= 1");
  return std::pow(2.0, n + 1) / (n + 2) * std::pow(kPi, (3.0 * n - 1.0) / 2.0) / std::tgamma((n + 1) / 2.0);
}

namespace {

// All alpha in N^n with |alpha| <= order.
std::vector<MultiIndex> multi_indices(int n, int order) {
  std::vector<MultiIndex> out;
  MultiIndex a(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int axis, int left) {
    if (axis == n) {
      out.push_back(a);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      a[static_cast<std::size_t>(axis)] = v;
      rec(axis + 1, left - v);
    }
    a[static_cast<std::size_t>(axis)] = 0;
  };
  rec(0, order);
  return out;
}

}  // namespace

Real cv_bound(const std::map<MultiIndex, Real>& sup_norms, int n) {
  const int order = 2 * cv_order(n);
  Real sum = 0.0;
  for (const MultiIndex& a : multi_indices(n, order)) {
    auto it = sup_norms.find(a);
    if (it == sup_norms.end()) throw ValidationError("cv_bound: missing derivative norm");
    if (!std::isfinite(it->second) || it->second < 0.0)
      throw ValidationError("cv_bound: derivative norm must be finite and non-negative");
    sum += it->second;
  }
  return cv_constant(n) * sum;
}

std::map<MultiIndex, Real> symbol_derivative_norms(const PhaseSpaceFunction& b,
                                                   const std::vector<RealVector>& eta_samples, int resolution) {
  const int n = b.dim();
  if (resolution < 4) throw ValidationError("symbol_derivative_norms: resolution must be >= 4");
  if (eta_samples.empty()) throw ValidationError("symbol_derivative_norms: no eta samples");
  const int qmax = b.is_band_limited() ? b.bandwidth() : resolution / 2 - 1;
  const int points = std::max(resolution, 4 * qmax + 4);
  const RealMatrix coarse = b.has_fourier() ? RealMatrix() : torus_grid(n, points);
  const RealMatrix grid = torus_grid(n, resolution);
  const auto qs = frequency_box(n, qmax);
  const auto alphas = multi_indices(n, 2 * cv_order(n));
  std::map<MultiIndex, Real> norms;
  for (const auto& a : alphas) norms[a] = 0.0;
  for (const RealVector& eta : eta_samples) {
    if (eta.size() != n) throw ValidationError("symbol_derivative_norms: eta dimension mismatch");
    const ComplexVector table = fourier_table(b, eta, qmax, points, coarse);
    for (const auto& a : alphas) {
      // d^alpha e^{iq.x} = prod (i q_k)^{alpha_k} e^{iq.x}
      ComplexVector weighted(table.size());
      for (std::size_t t = 0; t < qs.size(); ++t) {
        Complex f = 1.0;
        for (int k = 0; k < n; ++k)
          f *= std::pow(kI * static_cast<Real>(qs[t][static_cast<std::size_t>(k)]),
                        a[static_cast<std::size_t>(k)]);
        weighted[static_cast<Eigen::Index>(t)] = f * table[static_cast<Eigen::Index>(t)];
      }
      Real sup = 0.0;
      for (Eigen::Index p = 0; p < grid.rows(); ++p) {
        const RealVector x = grid.row(p).transpose();
        Complex s = 0.0;
        for (std::size_t t = 0; t < qs.size(); ++t) s += weighted[static_cast<Eigen::Index>(t)] * std::polar(1.0, dot(qs[t], x));
        sup = std::max(sup, std::abs(s));
      }
      norms[a] = std::max(norms[a], sup);
    }
  }
  return norms;
}

NormEstimate operator_norm(const ComplexMatrix& m, Real rel_tol, int max_iterations, unsigned long seed) {
  NormEstimate r;
  if (m.size() == 0 || m.isZero(0.0)) {
    r.converged = true;
    return r;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> gauss;
  ComplexVector v(m.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(gauss(rng), gauss(rng));
  v.normalize();
  Real prev = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const ComplexVector mv = m * v;
    const Real lambda = mv.squaredNorm();  // Rayleigh quotient of M^* M
    ComplexVector next = m.adjoint() * mv;
    const Real nn = next.norm();
    r.iterations = it;
    r.norm = std::sqrt(lambda);
    if (nn == 0.0) {
      r.converged = true;
      break;
    }
    v = next / nn;
    if (it > 1 && std::abs(lambda - prev) <= rel_tol * lambda) {
      r.converged = true;
      break;
    }
    prev = lambda;
  }
  return r;
}

}  // namespace isohom
