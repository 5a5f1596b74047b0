#include "isohom/homogenization.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <algorithm>
#include <exception>
#include <numeric>
#include <limits>
#include <random>
#include <thread>

#include "isohom/errors.hpp"
#include "isohom/quadrature.hpp"

namespace isohom {

namespace {

constexpr Real kInf = std::numeric_limits<Real>::infinity();
constexpr Real kGolden = 0.6180339887498949;

const FourierPotential& require_1d(const FourierPotential& pot) {
  if (pot.dim() != 1) throw ValidationError("action integral requires a one-dimensional potential");
  return pot;
}

template <typename F>
Real golden_min(F f, Real a, Real b, Real tol = 1e-12) {
  Real c = b - kGolden * (b - a);
  Real d = a + kGolden * (b - a);
  Real fc = f(c), fd = f(d);
  while (b - a > tol * (1.0 + std::abs(a) + std::abs(b))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

ActionIntegral::ActionIntegral(FourierPotential pot) : pot_(std::move(pot)) {
  require_1d(pot_);
  const ExtremaReport ext = refined_extrema(pot_);
  max_v_ = ext.max_value;
  argmax_ = ext.argmax[0];
  plateau_ = (*this)(max_v_);
}

Real ActionIntegral::operator()(Real energy) const {
  if (!std::isfinite(energy)) throw ValidationError("action_J: energy must be finite");
  if (energy < max_v_ - 1e-12) throw ValidationError("action undefined below max V");
  const Real e = std::max(energy, max_v_);
  RealVector x(1);
  auto f = [&](Real s) {
    x[0] = s;
    return std::sqrt(std::max(0.0, 2.0 * (e - eval_potential(pot_, x))));
  };
  // One period starting at the maximum, where the integrand has its square-root kink.
  const QuadratureResult q = integrate(f, argmax_, argmax_ + kTwoPi, 1e-13, 1e-13);
  return q.value / kTwoPi;
}

Real ActionIntegral::effective(Real momentum) const {
  const Real P = std::abs(momentum);
  if (!std::isfinite(P)) throw ValidationError("effective_1d: momentum must be finite");
  if (P <= plateau_) return max_v_;
  // J(max V + P^2/2) >= sqrt(2 (P^2/2)) = P brackets the root.
  Real lo = max_v_, hi = max_v_ + 0.5 * P * P;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const Real mid = 0.5 * (lo + hi);
    if ((*this)(mid) < P)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Real action_J(const FourierPotential& pot, Real energy) { return ActionIntegral(pot)(energy); }

Real effective_1d(const FourierPotential& pot, Real momentum) { return ActionIntegral(pot).effective(momentum); }

std::string cell_scheme_name(CellScheme s) { return s == CellScheme::Godunov ? "godunov" : "lax-friedrichs"; }

// ---------------------------------------------------------------- slices

SliceTable::SliceTable(const PhaseSpaceFunction& H, int grid, Real bound, Real step)
    : symbol_(&H), grid_(grid), bound_(bound), step_(step) {
  if (H.dim() != 1) throw ValidationError("SliceTable: one-dimensional symbols only");
  if (grid < 1 || !(bound > 0.0) || !(step > 0.0)) throw ValidationError("SliceTable: bad parameters");
  samples_ = static_cast<int>(std::ceil(2.0 * bound / step)) + 1;
  step_ = 2.0 * bound / (samples_ - 1);
  const int m = samples_;
  RealVector x(1), p(1);
  for (int i = 0; i < grid; ++i) {
    x[0] = kTwoPi * i / grid;
    RealVector y(m);
    for (int j = 0; j < m; ++j) {
      p[0] = -bound + step_ * j;
      y[j] = H.real_value(x, p);
    }
    // Natural spline: M_{j-1} + 4 M_j + M_{j+1} = 6 (y_{j+1} - 2 y_j + y_{j-1}) / h^2
    RealVector sec = RealVector::Zero(m);
    if (m > 2) {
      const int k = m - 2;
      RealVector diag = RealVector::Constant(k, 4.0), rhs(k);
      for (int j = 0; j < k; ++j) rhs[j] = 6.0 * (y[j + 2] - 2.0 * y[j + 1] + y[j]) / (step_ * step_);
      for (int j = 1; j < k; ++j) {
        const Real w = 1.0 / diag[j - 1];
        diag[j] -= w;
        rhs[j] -= w * rhs[j - 1];
      }
      sec[k] = rhs[k - 1] / diag[k - 1];
      for (int j = k - 2; j >= 0; --j) sec[j + 1] = (rhs[j] - sec[j + 2]) / diag[j];
    }
    Eigen::Index jmin = 0;
    y.minCoeff(&jmin);
    const Real scale = 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff());
    for (Eigen::Index j = 1; j <= jmin; ++j)
      if (y[j] > y[j - 1] + scale) unimodal_ = false;
    for (Eigen::Index j = jmin + 1; j < m; ++j)
      if (y[j] < y[j - 1] - scale) unimodal_ = false;
    values_.push_back(std::move(y));
    second_.push_back(std::move(sec));
    const Real a = -bound + step_ * static_cast<Real>(std::max<Eigen::Index>(jmin - 1, 0));
    const Real b = -bound + step_ * static_cast<Real>(std::min<Eigen::Index>(jmin + 1, m - 1));
    argmin_.push_back(golden_min([&](Real q) { return value(i, q); }, a, b));
  }
}

Real SliceTable::value(int i, Real p) const {
  if (p < -bound_ || p > bound_) {
    RealVector x(1), q(1);
    x[0] = kTwoPi * i / grid_;
    q[0] = p;
    return symbol_->real_value(x, q);
  }
  const auto& y = values_[static_cast<std::size_t>(i)];
  const auto& m = second_[static_cast<std::size_t>(i)];
  int j = static_cast<int>((p + bound_) / step_);
  j = std::clamp(j, 0, samples_ - 2);
  const Real a = (-bound_ + step_ * (j + 1) - p) / step_;
  const Real b = 1.0 - a;
  return a * y[j] + b * y[j + 1] + ((a * a * a - a) * m[j] + (b * b * b - b) * m[j + 1]) * step_ * step_ / 6.0;
}

Real SliceTable::derivative(int i, Real p) const {
  if (p < -bound_ || p > bound_) {
    constexpr Real h = 1e-6;
    return (value(i, p + h) - value(i, p - h)) / (2 * h);
  }
  const auto& y = values_[static_cast<std::size_t>(i)];
  const auto& m = second_[static_cast<std::size_t>(i)];
  int j = static_cast<int>((p + bound_) / step_);
  j = std::clamp(j, 0, samples_ - 2);
  const Real a = (-bound_ + step_ * (j + 1) - p) / step_;
  const Real b = 1.0 - a;
  return (y[j + 1] - y[j]) / step_ - (3 * a * a - 1) / 6.0 * step_ * m[j] + (3 * b * b - 1) / 6.0 * step_ * m[j + 1];
}

// ---------------------------------------------------------------- cell problem

namespace {

// Periodic grid with neighbour tables.
struct CellGrid {
  int dim;
  int n;
  long size;
  Real dx;
  RealMatrix points;
  std::vector<std::vector<long>> minus, plus;  // [axis][i]

  CellGrid(int dim_, int n_) : dim(dim_), n(n_) {
    size = 1;
    for (int a = 0; a < dim; ++a) size *= n;
    dx = kTwoPi / n;
    points = torus_grid(dim, n);
    minus.assign(static_cast<std::size_t>(dim), std::vector<long>(static_cast<std::size_t>(size)));
    plus = minus;
    long stride = 1;
    for (int a = dim - 1; a >= 0; --a) {
      for (long i = 0; i < size; ++i) {
        const long digit = (i / stride) % n;
        const long base = i - digit * stride;
        minus[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = base + ((digit + n - 1) % n) * stride;
        plus[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = base + ((digit + 1) % n) * stride;
      }
      stride *= n;
    }
  }
};

// Numerical Hamiltonian at one node as a function of the one-sided gradients.
struct NodeEval {
  Real value = 0.0;
  RealVector d_minus;  // dH_num / dp^-_a
  RealVector d_plus;   // dH_num / dp^+_a
};

class NumericalHamiltonian {
 public:
  virtual ~NumericalHamiltonian() = default;
  virtual void eval(long i, const RealVector& pm, const RealVector& pp, NodeEval& out) const = 0;
};

class MechanicalGodunov final : public NumericalHamiltonian {
 public:
  explicit MechanicalGodunov(RealVector v) : v_(std::move(v)) {}
  void eval(long i, const RealVector& pm, const RealVector& pp, NodeEval& out) const override {
    out.value = v_[i];
    for (Eigen::Index a = 0; a < pm.size(); ++a) {
      const Real A = std::max(pm[a], 0.0);
      const Real B = std::min(pp[a], 0.0);
      if (A * A >= B * B) {
        out.value += 0.5 * A * A;
        out.d_minus[a] = A;
        out.d_plus[a] = 0.0;
      } else {
        out.value += 0.5 * B * B;
        out.d_minus[a] = 0.0;
        out.d_plus[a] = B;
      }
    }
  }

 private:
  RealVector v_;
};

class MechanicalLF final : public NumericalHamiltonian {
 public:
  MechanicalLF(RealVector v, Real sigma) : v_(std::move(v)), sigma_(sigma) {}
  void eval(long i, const RealVector& pm, const RealVector& pp, NodeEval& out) const override {
    out.value = v_[i];
    for (Eigen::Index a = 0; a < pm.size(); ++a) {
      const Real bar = 0.5 * (pm[a] + pp[a]);
      out.value += 0.5 * bar * bar - 0.5 * sigma_ * (pp[a] - pm[a]);
      out.d_minus[a] = 0.5 * bar + 0.5 * sigma_;
      out.d_plus[a] = 0.5 * bar - 0.5 * sigma_;
    }
  }

 private:
  RealVector v_;
  Real sigma_;
};

// max(H(max(p-, p*)), H(min(p+, p*))) for slices with minimum at p*.
class SliceGodunov final : public NumericalHamiltonian {
 public:
  explicit SliceGodunov(const SliceTable& t) : t_(t) {}
  void eval(long i, const RealVector& pm, const RealVector& pp, NodeEval& out) const override {
    const int k = static_cast<int>(i);
    const Real star = t_.argmin(k);
    const Real a = std::max(pm[0], star);
    const Real b = std::min(pp[0], star);
    const Real ha = t_.value(k, a);
    const Real hb = t_.value(k, b);
    if (ha >= hb) {
      out.value = ha;
      out.d_minus[0] = pm[0] > star ? t_.derivative(k, a) : 0.0;
      out.d_plus[0] = 0.0;
    } else {
      out.value = hb;
      out.d_minus[0] = 0.0;
      out.d_plus[0] = pp[0] < star ? t_.derivative(k, b) : 0.0;
    }
  }

 private:
  const SliceTable& t_;
};

class SliceLF final : public NumericalHamiltonian {
 public:
  SliceLF(const SliceTable& t, Real sigma) : t_(t), sigma_(sigma) {}
  void eval(long i, const RealVector& pm, const RealVector& pp, NodeEval& out) const override {
    const int k = static_cast<int>(i);
    const Real bar = 0.5 * (pm[0] + pp[0]);
    const Real d = t_.derivative(k, bar);
    out.value = t_.value(k, bar) - 0.5 * sigma_ * (pp[0] - pm[0]);
    out.d_minus[0] = 0.5 * d + 0.5 * sigma_;
    out.d_plus[0] = 0.5 * d - 0.5 * sigma_;
  }

 private:
  const SliceTable& t_;
  Real sigma_;
};

class GeneralLF final : public NumericalHamiltonian {
 public:
  GeneralLF(const PhaseSpaceFunction& H, const RealMatrix& pts, Real sigma) : H_(H), pts_(pts), sigma_(sigma) {}
  void eval(long i, const RealVector& pm, const RealVector& pp, NodeEval& out) const override {
    const RealVector x = pts_.row(i).transpose();
    const RealVector bar = 0.5 * (pm + pp);
    RealVector gx, gp;
    H_.gradient(x, bar, gx, gp);
    out.value = H_.real_value(x, bar) - 0.5 * sigma_ * (pp - pm).sum();
    for (Eigen::Index a = 0; a < pm.size(); ++a) {
      out.d_minus[a] = 0.5 * gp[a] + 0.5 * sigma_;
      out.d_plus[a] = 0.5 * gp[a] - 0.5 * sigma_;
    }
  }

 private:
  const PhaseSpaceFunction& H_;
  const RealMatrix& pts_;
  Real sigma_;
};

using SparseMatrix = Eigen::SparseMatrix<Real>;

// F = delta u + H_num(P + D u), optionally with its Jacobian.
Real residual(const CellGrid& g, const NumericalHamiltonian& nh, const RealVector& P, Real delta, const RealVector& u,
              RealVector& F, std::vector<Eigen::Triplet<Real>>* trip) {
  const int dim = g.dim;
  RealVector pm(dim), pp(dim);
  NodeEval ev;
  ev.d_minus.resize(dim);
  ev.d_plus.resize(dim);
  F.resize(g.size);
  if (trip) trip->clear();
  Real worst = 0.0;
  for (long i = 0; i < g.size; ++i) {
    for (int a = 0; a < dim; ++a) {
      const auto ua = static_cast<std::size_t>(a);
      const auto ui = static_cast<std::size_t>(i);
      pm[a] = P[a] + (u[i] - u[g.minus[ua][ui]]) / g.dx;
      pp[a] = P[a] + (u[g.plus[ua][ui]] - u[i]) / g.dx;
    }
    nh.eval(i, pm, pp, ev);
    F[i] = delta * u[i] + ev.value;
    worst = std::max(worst, std::abs(F[i]));
    if (trip) {
      Real diag = delta;
      for (int a = 0; a < dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        const auto ui = static_cast<std::size_t>(i);
        diag += (ev.d_minus[a] - ev.d_plus[a]) / g.dx;
        trip->emplace_back(i, g.minus[ua][ui], -ev.d_minus[a] / g.dx);
        trip->emplace_back(i, g.plus[ua][ui], ev.d_plus[a] / g.dx);
      }
      trip->emplace_back(i, i, diag);
    }
  }
  return worst;
}

// Newton on delta u + H_num = 0; returns the final residual.
Real solve_discounted(const CellGrid& g, const NumericalHamiltonian& nh, const RealVector& P, Real delta,
                      RealVector& u, const CellOptions& opts, int& iterations) {
  RealVector F, Ft, trial;
  std::vector<Eigen::Triplet<Real>> trip;
  SparseMatrix jac(g.size, g.size);
  Eigen::SparseLU<SparseMatrix> lu;
  bool analyzed = false;
  Real res = residual(g, nh, P, delta, u, F, &trip);
  int stalls = 0;
  while (res > opts.newton_tol) {
    if (iterations >= opts.max_iterations) break;
    ++iterations;
    jac.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed) {
      lu.analyzePattern(jac);
      analyzed = true;
    }
    lu.factorize(jac);
    if (lu.info() != Eigen::Success) throw ConvergenceError("cell problem not converged: singular Newton matrix", res);
    const RealVector step = lu.solve(F);
    Real s = 1.0;
    Real rt = kInf;
    for (int k = 0; k < 30; ++k, s *= 0.5) {
      trial = u - s * step;
      rt = residual(g, nh, P, delta, trial, Ft, nullptr);
      if (rt < (1.0 - 1e-4 * s) * res) break;
    }
    if (rt < res) {
      u.swap(trial);
      stalls = 0;
    } else if (++stalls >= 5) {
      break;
    }
    res = residual(g, nh, P, delta, u, F, &trip);
  }
  if (res > opts.accept_tol)
    throw ConvergenceError("cell problem not converged: fixed-point residual above tolerance", res);
  return res;
}

Real lf_sigma_auto(const PhaseSpaceFunction& H, const RealVector& P, const SliceTable* slices) {
  const int dim = H.dim();
  if (const auto& pot = H.mechanical_potential()) {
    const ExtremaReport ext = refined_extrema(*pot);
    const Real emax = 0.5 * P.squaredNorm() + ext.max_value;
    return P.cwiseAbs().maxCoeff() + std::sqrt(2.0 * (emax - ext.min_value)) + 1.0;
  }
  Real sigma = 0.0;
  if (slices) {
    const int m = 401;
    for (int i = 0; i < slices->grid(); ++i)
      for (int j = 0; j < m; ++j)
        sigma = std::max(sigma, std::abs(slices->derivative(i, -slices->bound() + 2.0 * slices->bound() * j / (m - 1))));
    return sigma;
  }
  const Real radius = P.cwiseAbs().maxCoeff() + 4.0;
  const RealMatrix xs = torus_grid(dim, 16);
  const int per = 9;
  long total = 1;
  for (int a = 0; a < dim; ++a) total *= per;
  RealVector gx, gp, p(dim);
  for (Eigen::Index r = 0; r < xs.rows(); ++r)
    for (long k = 0; k < total; ++k) {
      long rem = k;
      for (int a = 0; a < dim; ++a) {
        p[a] = -radius + 2.0 * radius * static_cast<Real>(rem % per) / (per - 1);
        rem /= per;
      }
      H.gradient(xs.row(r).transpose(), p, gx, gp);
      sigma = std::max(sigma, gp.cwiseAbs().maxCoeff());
    }
  return sigma;
}

}  // namespace

CellSolution cell_problem_solve(const PhaseSpaceFunction& H, const RealVector& P, const CellOptions& opts) {
  const int dim = H.dim();
  if (P.size() != dim) throw ValidationError("cell_problem_solve: P dimension mismatch");
  if (!P.allFinite()) throw ValidationError("cell_problem_solve: P must be finite");
  if (opts.grid < 32) throw ValidationError("cell_problem_solve: grid must be >= 32 per axis");
  if (opts.discounts.empty()) throw ValidationError("cell_problem_solve: empty discount schedule");
  for (Real d : opts.discounts)
    if (!(d > 0.0)) throw ValidationError("cell_problem_solve: discounts must be positive");
  if (!(opts.newton_tol > 0.0 && opts.accept_tol > 0.0)) throw ValidationError("cell_problem_solve: tolerances must be positive");
  if (!H.is_real()) throw ValidationError("cell_problem_solve: symbol must be real-valued");

  const CellGrid g(dim, opts.grid);
  const auto& mech = H.mechanical_potential();

  std::shared_ptr<const SliceTable> slices = opts.slices;
  if (!mech && dim == 1 && !slices) {
    const Real bound = opts.table_bound > 0.0 ? opts.table_bound : std::abs(P[0]) + 4.0;
    slices = std::make_shared<SliceTable>(H, opts.grid, bound, opts.table_step);
  }
  if (slices && slices->grid() != opts.grid) throw ValidationError("cell_problem_solve: slice table grid mismatch");

  std::unique_ptr<NumericalHamiltonian> nh;
  RealVector vgrid;
  if (mech) {
    vgrid.resize(g.size);
    for (long i = 0; i < g.size; ++i) vgrid[i] = eval_potential(*mech, RealVector(g.points.row(i).transpose()));
  }
  const Real sigma = opts.scheme == CellScheme::LaxFriedrichs
                         ? (opts.lf_sigma > 0.0 ? opts.lf_sigma : lf_sigma_auto(H, P, slices.get()))
                         : 0.0;
  if (opts.scheme == CellScheme::Godunov) {
    if (mech)
      nh = std::make_unique<MechanicalGodunov>(vgrid);
    else if (slices)
      nh = std::make_unique<SliceGodunov>(*slices);
    else
      throw ValidationError("cell_problem_solve: Godunov scheme needs a mechanical symbol or n = 1");
  } else {
    if (mech)
      nh = std::make_unique<MechanicalLF>(vgrid, sigma);
    else if (slices)
      nh = std::make_unique<SliceLF>(*slices, sigma);
    else
      nh = std::make_unique<GeneralLF>(H, g.points, sigma);
  }

  std::vector<Real> schedule = opts.discounts;
  std::sort(schedule.begin(), schedule.end(), std::greater<>());
  // Continuation from large discounts, where Newton starts reliably from u = 0.
  std::vector<Real> ladder;
  for (Real d : {1e-1, 1e-2})
    if (d > schedule.front()) ladder.push_back(d);
  ladder.insert(ladder.end(), schedule.begin(), schedule.end());

  CellSolution sol;
  sol.scheme = opts.scheme;
  sol.unimodal = slices ? slices->unimodal() : true;
  RealVector u = RealVector::Zero(g.size);
  Real prev_delta = 0.0;
  Real fp_res = 0.0;
  for (Real delta : ladder) {
    if (prev_delta > 0.0) {
      const Real mean = u.mean();
      u.array() += mean * (prev_delta / delta - 1.0);
    }
    fp_res = solve_discounted(g, *nh, P, delta, u, opts, sol.newton_iterations);
    prev_delta = delta;
    if (std::find(schedule.begin(), schedule.end(), delta) != schedule.end()) {
      sol.discounts.push_back(delta);
      sol.estimates.push_back((-delta * u).maxCoeff());
    }
  }

  // Least-squares line through (delta, estimate); the intercept is H-bar.
  const auto k = static_cast<Eigen::Index>(sol.discounts.size());
  if (k == 1) {
    sol.value = sol.estimates.front();
  } else {
    RealMatrix A(k, 2);
    RealVector b(k);
    for (Eigen::Index i = 0; i < k; ++i) {
      A(i, 0) = 1.0;
      A(i, 1) = sol.discounts[static_cast<std::size_t>(i)];
      b[i] = sol.estimates[static_cast<std::size_t>(i)];
    }
    sol.value = A.colPivHouseholderQr().solve(b)[0];
  }

  Corrector& c = sol.corrector;
  c.P = P;
  c.grid = opts.grid;
  c.u = u.array() - u.mean();
  c.fixed_point_residual = fp_res;
  RealVector F;
  residual(g, *nh, P, 0.0, c.u, F, nullptr);
  c.residual = (F.array() - sol.value).abs().maxCoeff();
  return sol;
}

Real hbar_lower_bound(const PhaseSpaceFunction& H, int grid) {
  if (const auto& pot = H.mechanical_potential()) return refined_extrema(*pot).max_value;
  if (H.dim() != 1) return -kInf;
  Real lower = -kInf;
  const RealMatrix pts = torus_grid(1, grid);
  RealVector x(1), p(1);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    x[0] = pts(i, 0);
    auto f = [&](Real q) {
      p[0] = q;
      return H.real_value(x, p);
    };
    lower = std::max(lower, f(golden_min(f, -10.0, 10.0, 1e-10)));
  }
  return lower;
}

Real hbar_upper_bound(const PhaseSpaceFunction& H, const RealVector& P, int grid) {
  if (P.size() != H.dim()) throw ValidationError("hbar_bounds: P dimension mismatch");
  if (const auto& pot = H.mechanical_potential()) return 0.5 * P.squaredNorm() + refined_extrema(*pot).max_value;
  Real upper = -kInf;
  const RealMatrix pts = torus_grid(H.dim(), grid);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) upper = std::max(upper, H.real_value(pts.row(i).transpose(), P));
  return upper;
}

HbarBounds hbar_bounds(const PhaseSpaceFunction& H, const RealVector& P, int grid) {
  return {hbar_lower_bound(H, grid), hbar_upper_bound(H, P, grid)};
}

// ---------------------------------------------------------------- tables

int PGridSpec::per_axis() const {
  if (dim < 1) throw ValidationError("PGridSpec: dimension must be >= 1");
  if (!(pmax >= 0.0) || !(dp > 0.0)) throw ValidationError("PGridSpec: need pmax >= 0 and dp > 0");
  const Real steps = 2.0 * pmax / dp;
  const long k = std::lround(steps);
  if (std::abs(steps - static_cast<Real>(k)) > 1e-9 * std::max(1.0, steps))
    throw ValidationError("PGridSpec: 2 pmax must be an integer multiple of dp");
  if (k > 100000) throw ValidationError("PGridSpec: grid too large");
  return static_cast<int>(k) + 1;
}

std::vector<RealVector> PGridSpec::nodes() const {
  const int m = per_axis();
  long total = 1;
  for (int a = 0; a < dim; ++a) total *= m;
  std::vector<RealVector> out;
  out.reserve(static_cast<std::size_t>(total));
  for (long k = 0; k < total; ++k) {
    RealVector p(dim);
    long rem = k;
    for (int a = dim - 1; a >= 0; --a) {
      p[a] = -pmax + dp * static_cast<Real>(rem % m);
      rem /= m;
    }
    out.push_back(p);
  }
  return out;
}

std::string effective_method_name(EffectiveMethod m) {
  switch (m) {
    case EffectiveMethod::ClosedForm:
      return "closed-form";
    case EffectiveMethod::CellProblem:
      return "cell-problem";
    case EffectiveMethod::InfSupUpper:
      return "inf-sup-upper";
  }
  return "unknown";
}

EffectiveMethod parse_effective_method(const std::string& s) {
  if (s == "closed-form") return EffectiveMethod::ClosedForm;
  if (s == "cell-problem") return EffectiveMethod::CellProblem;
  if (s == "inf-sup-upper") return EffectiveMethod::InfSupUpper;
  throw ValidationError("unknown effective method: " + s);
}

namespace {

template <typename F>
void parallel_for(std::size_t count, int jobs, F body) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

EffectiveTable effective_grid(const PhaseSpaceFunction& H, const PGridSpec& spec, EffectiveMethod method,
                              const CellOptions& cell, const InfSupOptions& infsup, int jobs) {
  if (spec.dim != H.dim()) throw ValidationError("effective_grid: grid and symbol dimensions differ");
  EffectiveTable t;
  t.spec = spec;
  t.P = spec.nodes();
  t.method = method;
  const std::size_t n = t.P.size();
  t.values.assign(n, 0.0);
  t.residuals.assign(n, 0.0);

  if (method == EffectiveMethod::ClosedForm) {
    if (H.dim() != 1 || !H.mechanical_potential())
      throw ValidationError("effective_grid: closed form needs a one-dimensional mechanical symbol");
    const ActionIntegral J(*H.mechanical_potential());
    for (std::size_t i = 0; i < n; ++i) t.values[i] = J.effective(t.P[i][0]);
  } else if (method == EffectiveMethod::CellProblem) {
    CellOptions opts = cell;
    if (!H.mechanical_potential() && H.dim() == 1 && !opts.slices) {
      const Real bound = opts.table_bound > 0.0 ? opts.table_bound : spec.pmax + 4.0;
      opts.slices = std::make_shared<SliceTable>(H, opts.grid, bound, opts.table_step);
    }
    std::vector<std::string> errors(n);
    parallel_for(n, jobs, [&](std::size_t i) {
      try {
        const CellSolution s = cell_problem_solve(H, t.P[i], opts);
        t.values[i] = s.value;
        t.residuals[i] = s.corrector.residual;
      } catch (const std::exception& e) {
        t.values[i] = std::numeric_limits<Real>::quiet_NaN();
        t.residuals[i] = std::numeric_limits<Real>::quiet_NaN();
        errors[i] = e.what();
      }
    });
    for (const auto& e : errors)
      if (!e.empty()) {
        t.valid = false;
        t.failure = e;
        break;
      }
  } else {
    parallel_for(n, jobs, [&](std::size_t i) { t.values[i] = infsup_upper(H, t.P[i], infsup).value; });
  }
  t.certificates = certify(t, H);
  return t;
}

EffectiveCertificates certify(const EffectiveTable& t, const PhaseSpaceFunction& H) {
  EffectiveCertificates c;
  const int dim = t.spec.dim;
  const int m = t.spec.per_axis();
  const std::size_t n = t.P.size();
  std::vector<long> stride(static_cast<std::size_t>(dim));
  long s = 1;
  for (int a = dim - 1; a >= 0; --a) {
    stride[static_cast<std::size_t>(a)] = s;
    s *= m;
  }
  auto digits = [&](std::size_t idx) {
    std::vector<int> d(static_cast<std::size_t>(dim));
    for (int a = 0; a < dim; ++a)
      d[static_cast<std::size_t>(a)] = static_cast<int>((static_cast<long>(idx) / stride[static_cast<std::size_t>(a)]) % m);
    return d;
  };
  auto index = [&](const std::vector<int>& d) {
    long idx = 0;
    for (int a = 0; a < dim; ++a) idx += d[static_cast<std::size_t>(a)] * stride[static_cast<std::size_t>(a)];
    return static_cast<std::size_t>(idx);
  };
  // Axis and diagonal directions.
  std::vector<std::vector<int>> dirs;
  for (int a = 0; a < dim; ++a) {
    std::vector<int> d(static_cast<std::size_t>(dim), 0);
    d[static_cast<std::size_t>(a)] = 1;
    dirs.push_back(d);
    for (int b = a + 1; b < dim; ++b) {
      for (int sgn : {1, -1}) {
        auto e = d;
        e[static_cast<std::size_t>(b)] = sgn;
        dirs.push_back(e);
      }
    }
  }
  c.convexity_defect = -kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const auto di = digits(i);
    std::vector<int> mirror(di);
    for (auto& v : mirror) v = m - 1 - v;
    c.even_defect = std::max(c.even_defect, std::abs(t.values[i] - t.values[index(mirror)]));
    for (const auto& d : dirs) {
      std::vector<int> lo(di), hi(di);
      bool ok = true;
      for (int a = 0; a < dim; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        lo[ua] -= d[ua];
        hi[ua] += d[ua];
        if (lo[ua] < 0 || lo[ua] >= m || hi[ua] < 0 || hi[ua] >= m) ok = false;
      }
      if (!ok) continue;
      c.convexity_defect =
          std::max(c.convexity_defect, t.values[i] - 0.5 * (t.values[index(lo)] + t.values[index(hi)]));
    }
  }
  if (c.convexity_defect == -kInf) c.convexity_defect = 0.0;
  c.convex = c.convexity_defect <= kCertificateTol;

  const Real lower = hbar_lower_bound(H);
  for (std::size_t i = 0; i < n; ++i) {
    const HbarBounds b{lower, hbar_upper_bound(H, t.P[i])};
    const Real v = t.values[i];
    Real defect = 0.0;
    if (std::isfinite(b.lower)) defect = std::max(defect, b.lower - v);
    defect = std::max(defect, v - b.upper);
    if (!std::isfinite(v)) defect = kInf;
    c.bound_defect = std::max(c.bound_defect, defect);
  }
  c.bounds_ok = c.bound_defect <= kCertificateTol;
  return c;
}

// ---------------------------------------------------------------- inf-sup

InfSupResult infsup_upper(const PhaseSpaceFunction& H, const RealVector& P, const InfSupOptions& opts) {
  const int dim = H.dim();
  if (P.size() != dim) throw ValidationError("infsup_upper: P dimension mismatch");
  if (opts.bandwidth < 0 || opts.bandwidth > 4) throw ValidationError("infsup_upper: bandwidth must lie in [0, 4]");
  if (opts.grid < 8) throw ValidationError("infsup_upper: grid must be >= 8");
  if (opts.max_evaluations < 1) throw ValidationError("infsup_upper: need at least one evaluation");

  // Half of the nonzero frequencies: first nonzero component positive.
  std::vector<Frequency> qs;
  for (const Frequency& q : frequency_box(dim, opts.bandwidth)) {
    for (int v : q) {
      if (v == 0) continue;
      if (v > 0) qs.push_back(q);
      break;
    }
  }
  const RealMatrix pts = torus_grid(dim, opts.grid);
  const Eigen::Index npts = pts.rows();
  const auto nparams = static_cast<Eigen::Index>(2 * qs.size());
  // grad v along axis a = G[a] * c with c = (alpha_q, beta_q) for alpha cos + beta sin.
  std::vector<RealMatrix> G(static_cast<std::size_t>(dim), RealMatrix(npts, nparams));
  for (Eigen::Index i = 0; i < npts; ++i)
    for (std::size_t k = 0; k < qs.size(); ++k) {
      const Real ph = dot(qs[k], pts.row(i).transpose());
      for (int a = 0; a < dim; ++a) {
        const Real qa = qs[k][static_cast<std::size_t>(a)];
        G[static_cast<std::size_t>(a)](i, static_cast<Eigen::Index>(2 * k)) = -qa * std::sin(ph);
        G[static_cast<std::size_t>(a)](i, static_cast<Eigen::Index>(2 * k + 1)) = qa * std::cos(ph);
      }
    }
  const auto& mech = H.mechanical_potential();
  RealVector vgrid;
  if (mech) {
    vgrid.resize(npts);
    for (Eigen::Index i = 0; i < npts; ++i) vgrid[i] = eval_potential(*mech, RealVector(pts.row(i).transpose()));
  }

  InfSupResult r;
  auto objective = [&](const RealVector& c) {
    ++r.evaluations;
    RealMatrix p(npts, dim);
    for (int a = 0; a < dim; ++a) {
      p.col(a).setConstant(P[a]);
      if (nparams > 0) p.col(a) += G[static_cast<std::size_t>(a)] * c;
    }
    Real sup = -kInf;
    for (Eigen::Index i = 0; i < npts; ++i) {
      const Real h = mech ? 0.5 * p.row(i).squaredNorm() + vgrid[i]
                          : H.real_value(pts.row(i).transpose(), p.row(i).transpose());
      sup = std::max(sup, h);
    }
    return sup;
  };

  RealVector c = RealVector::Zero(nparams);
  Real best = objective(c);
  if (nparams > 0) {
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<Real> gauss;
    Real step = 0.5;
    while (step > 1e-9 && r.evaluations < opts.max_evaluations) {
      std::vector<RealVector> dirs;
      for (Eigen::Index j = 0; j < nparams; ++j) dirs.push_back(RealVector::Unit(nparams, j));
      for (Eigen::Index j = 0; j < 4 * nparams; ++j) {
        RealVector d(nparams);
        for (Eigen::Index k = 0; k < nparams; ++k) d[k] = gauss(rng);
        dirs.push_back(d.normalized());
      }
      bool improved = false;
      for (const RealVector& d : dirs) {
        for (Real sgn : {1.0, -1.0}) {
          if (r.evaluations >= opts.max_evaluations) break;
          const RealVector trial = c + sgn * step * d;
          const Real v = objective(trial);
          if (v < best) {
            best = v;
            c = trial;
            improved = true;
            break;
          }
        }
        if (improved || r.evaluations >= opts.max_evaluations) break;
      }
      if (!improved) step *= 0.5;
    }
  }
  r.value = best;
  r.coefficients = c;
  return r;
}

// ---------------------------------------------------------------- invariance, sublevel sets

InvarianceReport invariance_check(const PhaseSpaceFunction& H, const SymplecticMap& phi,
                                  const std::vector<RealVector>& P, const CellOptions& opts, int defect_probes) {
  if (P.empty()) throw ValidationError("invariance_check: empty P list");
  InvarianceReport r;
  r.P = P;
  const PhaseSpaceFunction mapped = compose_hamiltonian(H, phi);
  CellOptions mopts = opts;
  mopts.slices.reset();
  if (H.dim() == 1) {
    Real pmax = 0.0;
    for (const auto& p : P) pmax = std::max(pmax, p.cwiseAbs().maxCoeff());
    const Real bound = opts.table_bound > 0.0 ? opts.table_bound : pmax + 4.0;
    mopts.slices = std::make_shared<SliceTable>(mapped, opts.grid, bound, opts.table_step);
  }
  for (const auto& p : P) {
    r.hbar_original.push_back(cell_problem_solve(H, p, opts).value);
    r.hbar_mapped.push_back(cell_problem_solve(mapped, p, mopts).value);
    r.max_distance = std::max(r.max_distance, std::abs(r.hbar_mapped.back() - r.hbar_original.back()));
  }
  r.symplectic_defect = symplectic_defect(phi, defect_probes);
  return r;
}

SublevelSet sublevel_set(const EffectiveTable& table, Real energy) {
  SublevelSet s;
  s.energy = energy;
  if (table.values.empty()) throw ValidationError("sublevel_set: empty table");
  const int dim = table.spec.dim;
  const int m = table.spec.per_axis();
  std::vector<char> inside(table.values.size(), 0);
  for (std::size_t i = 0; i < table.values.size(); ++i)
    if (table.values[i] <= energy) {
      inside[i] = 1;
      s.indices.push_back(i);
      s.points.push_back(table.P[i]);
    }
  s.empty = s.indices.empty();
  if (s.empty) return s;

  auto digits = [&](std::size_t idx) {
    std::vector<long> d(static_cast<std::size_t>(dim));
    long rem = static_cast<long>(idx);
    for (int a = dim - 1; a >= 0; --a) {
      d[static_cast<std::size_t>(a)] = rem % m;
      rem /= m;
    }
    return d;
  };
  auto index = [&](const std::vector<long>& d) {
    long idx = 0;
    for (int a = 0; a < dim; ++a) idx = idx * m + d[static_cast<std::size_t>(a)];
    return static_cast<std::size_t>(idx);
  };
  // Lattice points on each segment between inside points must be inside.
  for (std::size_t u = 0; u < s.indices.size() && s.convex; ++u)
    for (std::size_t v = u + 1; v < s.indices.size() && s.convex; ++v) {
      const auto a = digits(s.indices[u]);
      const auto b = digits(s.indices[v]);
      long g = 0;
      for (int k = 0; k < dim; ++k) g = std::gcd(g, std::abs(b[static_cast<std::size_t>(k)] - a[static_cast<std::size_t>(k)]));
      for (long t = 1; t < g; ++t) {
        std::vector<long> c(static_cast<std::size_t>(dim));
        for (int k = 0; k < dim; ++k) {
          const auto uk = static_cast<std::size_t>(k);
          c[uk] = a[uk] + (b[uk] - a[uk]) / g * t;
        }
        if (!inside[index(c)]) {
          s.convex = false;
          break;
        }
      }
    }
  return s;
}

}  // namespace isohom
