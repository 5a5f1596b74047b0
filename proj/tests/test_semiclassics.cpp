#include "doctest.h"

#include <cmath>

#include "isohom/errors.hpp"
#include "isohom/semiclassics.hpp"

using namespace isohom;

namespace {

const FourierPotential cos1 = cosine_mode({1});

}  // namespace

TEST_CASE("propagator examples") {
  const HamiltonianMatrix m = assemble_hamiltonian(cos1, 1.0, 8);
  const Propagator id = propagate(m, 0.0);
  CHECK((id.U - ComplexMatrix::Identity(17, 17)).cwiseAbs().maxCoeff() <= 1e-12);

  const Real hbar = 0.3, t = 0.7;
  const HamiltonianMatrix f = assemble_hamiltonian(FourierPotential(1), hbar, 6);
  const Propagator pf = propagate(f, t);
  for (Eigen::Index i = 0; i < f.basis.size(); ++i) {
    const Real k = f.basis[i][0];
    CHECK(std::abs(pf.U(i, i) - std::polar(1.0, -t * 0.5 * hbar * k * k)) <= 1e-12);
  }

  SpectrumOptions o;
  o.eigenvectors = true;
  const SpectrumResult s = eigen_spectrum(m, o);
  const Propagator p = propagate(m, 1.0);
  const ComplexVector v0 = s.eigenvectors.col(0);
  CHECK((p.U * v0 - std::polar(1.0, -s.eigenvalues[0]) * v0).norm() <= 1e-10);
  CHECK(p.unitarity_defect <= 1e-10);
  CHECK((p.U * m.entries - m.entries * p.U).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("propagator rejects non-Hermitian input") {
  ComplexMatrix bad = ComplexMatrix::Zero(3, 3);
  bad(0, 1) = 1.0;
  CHECK_THROWS_AS(propagate(bad, PlaneWaveBasis(1, 1), 1.0, 1.0), ValidationError);
}

TEST_CASE("conjugation preserves the spectrum") {
  const Real hbar = 0.2;
  const Propagator p = propagate(assemble_hamiltonian(cos1 + sine_mode({2}, 0.4), hbar, 12), 1.0);
  const WeylMatrix a = weyl_matrix(bump_symbol(cos1), hbar, 12);
  const ComplexMatrix c = p.U.adjoint() * a.entries * p.U;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> e1(a.entries, Eigen::EigenvaluesOnly);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> e2(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
  CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("interior block") {
  const PlaneWaveBasis b(2, 3);
  ComplexMatrix m(b.size(), b.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = Complex(static_cast<Real>(i), static_cast<Real>(j));
  const ComplexMatrix blk = interior_block(m, b, 1);
  REQUIRE(blk.rows() == 9);
  const PlaneWaveBasis inner(2, 1);
  for (Eigen::Index i = 0; i < 9; ++i)
    for (Eigen::Index j = 0; j < 9; ++j)
      CHECK(blk(i, j) == m(*b.index_of(inner[i]), *b.index_of(inner[j])));
}

TEST_CASE("Egorov residual examples") {
  const PhaseSpaceFunction free = kinetic_symbol(1);
  const PhaseSpaceFunction pend = mechanical_symbol(cos1);
  const PhaseSpaceFunction a = polynomial_symbol(1, {{{1}, {0}, 0.5}, {{-1}, {0}, 0.5}, {{2}, {1}, Complex(0.0, 0.3)},
                                                     {{-2}, {1}, Complex(0.0, -0.3)}});
  CHECK(egorov_residual(a, free, 1.0, 0.1, 16) <= 1e-8);
  CHECK(egorov_residual(bump_symbol(cos1), free, 1.0, 0.2, 16) <= 1e-8);
  CHECK(egorov_residual(constant_symbol(1, 1.0), pend, 1.0, 0.1, 16) <= 1e-12);
  const Real r = egorov_residual(bump_symbol(cos1), pend, 1.0, 0.1, 32);
  CHECK(r > 0.0);
  CHECK(r <= 10 * 0.1);
}

TEST_CASE("Egorov scaling flags exact cases") {
  const EgorovCutoffRule rule{8.0, 0.5, 4, 32};
  const EgorovReport f = egorov_scaling(bump_symbol(cos1), kinetic_symbol(1), 1.0, {0.4, 0.2, 0.1, 0.05}, rule);
  CHECK(f.exact);
  for (Real r : f.residual) CHECK(r <= 1e-8);
  const EgorovReport one =
      egorov_scaling(constant_symbol(1, 1.0), mechanical_symbol(cos1), 1.0, {0.4, 0.2, 0.1, 0.05}, rule);
  CHECK(one.exact);
  CHECK_THROWS_AS(egorov_scaling(bump_symbol(cos1), kinetic_symbol(1), 1.0, {0.2, 0.1, 0.05}, rule), ValidationError);
  CHECK_THROWS_AS(egorov_scaling(bump_symbol(cos1), kinetic_symbol(1), 1.0, {0.1, 0.2, 0.05, 0.02}, rule),
                  ValidationError);
}

TEST_CASE("pendulum residual decreases with hbar") {
  const EgorovCutoffRule rule{8.0, 0.5, 4, 32};
  const EgorovReport r =
      egorov_scaling(bump_symbol(cos1), mechanical_symbol(cos1), 1.0, {0.4, 0.3, 0.2, 0.1}, rule);
  CHECK_FALSE(r.exact);
  for (std::size_t i = 1; i < r.residual.size(); ++i) CHECK(r.residual[i] <= 1.1 * r.residual[i - 1]);
  CHECK(std::isfinite(r.slope));
  CHECK(r.slope > 0.5);
}

TEST_CASE("cutoff rule") {
  const EgorovCutoffRule rule;
  CHECK(rule.cutoff(0.2) == std::min(rule.cap, 4 * static_cast<int>(std::ceil(8.0 / std::sqrt(0.2)))));
  CHECK(rule.cutoff(1.0) == 32);
  CHECK(rule.cutoff(1e-4) == rule.cap);
  for (Real h : {0.4, 0.2, 0.1, 0.05, 0.025}) CHECK(rule.cutoff(h) % 2 == 0);
}

TEST_CASE("Moyal bracket to leading order") {
  const PhaseSpaceFunction b = kinetic_symbol(1);
  const PhaseSpaceFunction a = potential_symbol(cos1 + sine_mode({1}, 0.5));
  // exact for a quadratic generator
  CHECK(moyal_defect(b, a, 0.1, 16) <= 1e-10);

  const PhaseSpaceFunction pend = mechanical_symbol(cos1);
  const PhaseSpaceFunction cubic = polynomial_symbol(1, {{{1}, {3}, 0.5}, {{-1}, {3}, 0.5}});
  std::vector<Real> hs = {0.2, 0.1, 0.05}, rs;
  for (Real h : hs) rs.push_back(moyal_defect(pend, cubic, h, 16));
  const LogLogFit fit = loglog_fit(hs, rs);
  CHECK(fit.slope >= 0.9);
  for (std::size_t i = 0; i < hs.size(); ++i) CHECK(rs[i] <= fit.constant * hs[i] * 1.5);
}

TEST_CASE("log-log fit") {
  const LogLogFit f = loglog_fit({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0});
  CHECK(f.slope == doctest::Approx(2.0));
  CHECK(f.constant == doctest::Approx(3.0));
  CHECK_THROWS_AS(loglog_fit({1.0}, {1.0}), ValidationError);
}
