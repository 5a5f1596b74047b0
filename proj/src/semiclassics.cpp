#include "isohom/semiclassics.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "isohom/dynamics.hpp"
#include "isohom/errors.hpp"

namespace isohom {

Propagator propagate(const ComplexMatrix& m, const PlaneWaveBasis& basis, Real hbar, Real t) {
  if (m.rows() != basis.size() || m.cols() != basis.size()) throw ValidationError("propagate: matrix size mismatch");
  if (!(hbar > 0.0 && hbar <= 1.0)) throw ValidationError("propagate: hbar must lie in (0, 1]");
  if (!std::isfinite(t)) throw ValidationError("propagate: time must be finite");
  const Real scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (hermitian_defect(m) > 1e-12 * scale) throw ValidationError("propagate: matrix is not Hermitian");
  Propagator p;
  p.hbar = hbar;
  p.t = t;
  p.basis = basis;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
  if (es.info() != Eigen::Success) throw ConvergenceError("propagate: eigendecomposition failed", 0.0);
  ComplexVector phase(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phase.size(); ++i) phase[i] = std::polar(1.0, -t * es.eigenvalues()[i] / hbar);
  p.U = es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
  const Eigen::Index n = p.U.rows();
  p.unitarity_defect = (p.U.adjoint() * p.U - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  return p;
}

Propagator propagate(const HamiltonianMatrix& m, Real t) { return propagate(m.entries, m.basis, m.hbar, t); }

Propagator propagate(const WeylMatrix& m, Real t) { return propagate(m.entries, m.basis, m.hbar, t); }

ComplexMatrix interior_block(const ComplexMatrix& m, const PlaneWaveBasis& basis, int inner) {
  if (inner < 0 || inner > basis.cutoff()) throw ValidationError("interior_block: inner cutoff out of range");
  const PlaneWaveBasis small(basis.dim(), inner);
  std::vector<Eigen::Index> idx;
  for (const Frequency& k : small.frequencies()) idx.push_back(*basis.index_of(k));
  const auto n = static_cast<Eigen::Index>(idx.size());
  ComplexMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = m(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  return out;
}

Real egorov_residual(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b, Real t, Real hbar, int cutoff,
                     const EgorovOptions& opts) {
  if (a.dim() != b.dim()) throw ValidationError("egorov_residual: dimension mismatch");
  if (!b.is_real()) throw ValidationError("egorov_residual: generator must be real-valued");
  if (cutoff < 2) throw ValidationError("egorov_residual: cutoff must be >= 2");
  const int inner = cutoff / 2;
  const WeylMatrix B = weyl_matrix(b, hbar, cutoff);
  const WeylMatrix A = weyl_matrix(a, hbar, cutoff);
  const Propagator U = propagate(B, t);
  const ComplexMatrix conj = interior_block(U.U.adjoint() * A.entries * U.U, B.basis, inner);

  // a o phi^t, each node carried along the forward flow of b.
  const Real h = opts.flow_step;
  const PhaseSpaceFunction flowed(
      a.dim(),
      [a, b, t, h](const RealVector& x, const RealVector& eta) {
        const FlowResult r = flow(b, x, eta, t, h, false);
        return a(r.x, r.p);
      },
      PhaseSpaceFunction::kUnbounded, a.is_real());
  WeylOptions wopts;
  wopts.quadrature_points = opts.quadrature_points;
  const WeylMatrix F = weyl_matrix(flowed, hbar, inner, wopts);
  return operator_norm(conj - F.entries).norm;
}

int EgorovCutoffRule::cutoff(Real hbar) const {
  if (!(hbar > 0.0)) throw ValidationError("EgorovCutoffRule: hbar must be positive");
  const auto k = static_cast<long>(std::ceil(scale / std::pow(hbar, exponent) - 1e-12)) * multiple;
  return static_cast<int>(std::min<long>(cap, k));
}

LogLogFit loglog_fit(const std::vector<Real>& x, const std::vector<Real>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("loglog_fit: need at least two paired points");
  const auto n = static_cast<Eigen::Index>(x.size());
  RealMatrix A(n, 2);
  RealVector rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!(x[ui] > 0.0) || !(y[ui] > 0.0)) throw ValidationError("loglog_fit: values must be positive");
    A(i, 0) = std::log(x[ui]);
    A(i, 1) = 1.0;
    rhs[i] = std::log(y[ui]);
  }
  const RealVector c = A.colPivHouseholderQr().solve(rhs);
  return {c[0], std::exp(c[1])};
}

EgorovReport egorov_scaling(const PhaseSpaceFunction& a, const PhaseSpaceFunction& b, Real t,
                            const std::vector<Real>& hbars, const EgorovCutoffRule& rule, const EgorovOptions& opts,
                            int jobs) {
  if (hbars.size() < 4) throw ValidationError("egorov_scaling: need at least four hbar values");
  for (std::size_t i = 1; i < hbars.size(); ++i)
    if (!(hbars[i] < hbars[i - 1])) throw ValidationError("egorov_scaling: hbar list must be decreasing");
  EgorovReport r;
  r.t = t;
  r.hbar = hbars;
  for (Real h : hbars) r.cutoffs.push_back(rule.cutoff(h));
  r.residual.assign(hbars.size(), 0.0);
  std::vector<std::exception_ptr> errors(hbars.size());
  const std::size_t workers = std::min<std::size_t>(hbars.size(), static_cast<std::size_t>(std::max(1, jobs)));
  auto work = [&](std::size_t w) {
    for (std::size_t i = w; i < hbars.size(); i += workers) {
      try {
        r.residual[i] = egorov_residual(a, b, t, hbars[i], r.cutoffs[i], opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  r.exact = true;
  for (Real v : r.residual)
    if (v > kExactResidual) r.exact = false;
  if (r.exact) {
    r.slope = std::numeric_limits<Real>::quiet_NaN();
    r.constant = std::numeric_limits<Real>::quiet_NaN();
  } else {
    const LogLogFit fit = loglog_fit(r.hbar, r.residual);
    r.slope = fit.slope;
    r.constant = fit.constant;
  }
  return r;
}

Real moyal_defect(const PhaseSpaceFunction& b, const PhaseSpaceFunction& a, Real hbar, int cutoff) {
  if (cutoff < 2) throw ValidationError("moyal_defect: cutoff must be >= 2");
  const WeylMatrix B = weyl_matrix(b, hbar, cutoff);
  const WeylMatrix A = weyl_matrix(a, hbar, cutoff);
  const ComplexMatrix comm = Complex(0.0, 1.0 / hbar) * (B.entries * A.entries - A.entries * B.entries);
  const WeylMatrix P = weyl_matrix(poisson_bracket(b, a), hbar, cutoff);
  const int inner = cutoff / 2;
  return operator_norm(interior_block(comm - P.entries, B.basis, inner)).norm;
}

}  // namespace isohom
