#include "doctest.h"

#include <cmath>
#include <thread>

#include "isohom/dynamics.hpp"
#include "isohom/errors.hpp"
#include "isohom/homogenization.hpp"

using namespace isohom;

namespace {

RealVector vec(std::initializer_list<Real> v) {
  RealVector r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (Real x : v) r[i++] = x;
  return r;
}

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

const FourierPotential cos1 = cosine_mode({1});
const FourierPotential cos2 = cosine_mode({1, 0}) + cosine_mode({0, 1});

}  // namespace

TEST_CASE("action integral examples") {
  CHECK(action_J(FourierPotential(1), 2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(action_J(cos1, 1.0) == doctest::Approx(4.0 / kPi).epsilon(1e-10));
  // brute-force trapezoid on 10^6 points
  const int n = 1000000;
  Real s = 0.0;
  for (int i = 0; i < n; ++i) s += std::sqrt(2.0 * (3.0 - std::cos(kTwoPi * i / n)));
  CHECK(std::abs(action_J(cos1, 3.0) - s / n) <= 1e-8);
  CHECK_THROWS_AS(action_J(cos1, 0.9), ValidationError);
  CHECK(action_J(cos1, 1.0 - 1e-13) == doctest::Approx(4.0 / kPi).epsilon(1e-10));
}

TEST_CASE("action integral monotone with free asymptotics") {
  const ActionIntegral J(cos1 + sine_mode({2}, 0.3));
  Real prev = J(J.max_potential());
  for (int i = 1; i <= 40; ++i) {
    const Real v = J(J.max_potential() + 0.1 * i);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(J(1e3) == doctest::Approx(std::sqrt(2e3)).epsilon(1e-2));
  CHECK(J.plateau_half_width() == doctest::Approx(J(J.max_potential())));
}

TEST_CASE("effective 1D examples") {
  CHECK(effective_1d(FourierPotential(1), 3.0) == doctest::Approx(4.5).epsilon(1e-9));
  CHECK(effective_1d(cos1, 1.0) == 1.0);
  CHECK(effective_1d(cos1, -4.0 / kPi) == 1.0);
  const Real e = effective_1d(cos1, 2.0);
  CHECK(e > 1.0);
  CHECK(std::abs(action_J(cos1, e) - 2.0) <= 1e-9);
  // continuity at the plateau edge
  CHECK(std::abs(effective_1d(cos1, 4.0 / kPi + 1e-9) - 1.0) <= 1e-6);
}

TEST_CASE("cell problem examples") {
  const PhaseSpaceFunction free1 = mechanical_symbol(FourierPotential(1));
  for (Real P : {0.0, 0.7, -2.5}) {
    const CellSolution s = cell_problem_solve(free1, vec({P}));
    CHECK(std::abs(s.value - 0.5 * P * P) <= 2e-3);
  }
  const CellSolution c = cell_problem_solve(mechanical_symbol(cos1), vec({2.0}));
  CHECK(std::abs(c.value - effective_1d(cos1, 2.0)) <= 2e-3);
  CHECK(std::abs(c.corrector.u.mean()) <= 1e-10);
  CHECK(c.corrector.residual >= 0.0);

  const CellSolution d = cell_problem_solve(mechanical_symbol(cos2), vec({2.0, 0.0}));
  CHECK(std::abs(d.value - (effective_1d(cos1, 2.0) + 1.0)) <= 5e-3);
  CHECK(std::abs(d.corrector.u.mean()) <= 1e-10);
}

TEST_CASE("cell problem preconditions and failure") {
  const PhaseSpaceFunction H = mechanical_symbol(cos1);
  CellOptions small;
  small.grid = 16;
  CHECK_THROWS_AS(cell_problem_solve(H, vec({1.0}), small), ValidationError);
  CHECK_THROWS_AS(cell_problem_solve(H, vec({1.0, 0.0})), ValidationError);
  CellOptions capped;
  capped.max_iterations = 1;
  CHECK_THROWS_AS(cell_problem_solve(H, vec({2.0}), capped), ConvergenceError);
}

TEST_CASE("grid refinement and the Lax-Friedrichs scheme") {
  const PhaseSpaceFunction H = mechanical_symbol(cos1 + sine_mode({2}, 0.3));
  CellOptions coarse, fine;
  fine.grid = 128;
  for (Real P : {0.5, 2.0}) {
    const CellSolution a = cell_problem_solve(H, vec({P}), coarse);
    const CellSolution b = cell_problem_solve(H, vec({P}), fine);
    CHECK(std::abs(a.value - b.value) <= 2 * std::max(a.corrector.residual, 1e-6));
  }
  CellOptions lf;
  lf.scheme = CellScheme::LaxFriedrichs;
  lf.grid = 256;
  const CellSolution l = cell_problem_solve(mechanical_symbol(cos1), vec({2.0}), lf);
  CHECK(std::abs(l.value - effective_1d(cos1, 2.0)) <= 5e-2);
}

TEST_CASE("effective grid examples and certificates") {
  const EffectiveTable free = effective_grid(mechanical_symbol(FourierPotential(1)), {1, 3.0, 0.25},
                                             EffectiveMethod::CellProblem, {}, {}, jobs());
  REQUIRE(free.valid);
  CHECK(free.P.size() == 25);
  for (std::size_t i = 0; i < free.P.size(); ++i) CHECK(std::abs(free.values[i] - 0.5 * free.P[i].squaredNorm()) <= 2e-3);

  const EffectiveTable closed = effective_grid(mechanical_symbol(cos1), {1, 3.0, 0.25}, EffectiveMethod::ClosedForm);
  REQUIRE(closed.valid);
  for (std::size_t i = 0; i < closed.P.size(); ++i)
    if (std::abs(closed.P[i][0]) <= 4.0 / kPi) CHECK(closed.values[i] == 1.0);
  CHECK(closed.certificates.convex);
  CHECK(closed.certificates.bounds_ok);
  CHECK(closed.certificates.even_defect <= 1e-8);

  const EffectiveTable cell = effective_grid(mechanical_symbol(cos1), {1, 3.0, 0.25}, EffectiveMethod::CellProblem,
                                             {}, {}, jobs());
  REQUIRE(cell.valid);
  for (std::size_t i = 0; i < cell.P.size(); ++i) CHECK(std::abs(cell.values[i] - closed.values[i]) <= 2e-3);
  CHECK(cell.certificates.convex);
  CHECK(cell.certificates.bounds_ok);

  CHECK_THROWS_AS(effective_grid(mechanical_symbol(cos2), {2, 2.0, 0.5}, EffectiveMethod::ClosedForm), ValidationError);
}

TEST_CASE("two-dimensional plateau and separability") {
  const EffectiveTable t = effective_grid(mechanical_symbol(cos2), {2, 2.0, 0.5}, EffectiveMethod::CellProblem, {}, {},
                                          jobs());
  REQUIRE(t.valid);
  REQUIRE(t.P.size() == 81);
  for (std::size_t i = 0; i < t.P.size(); ++i) {
    const Real want = effective_1d(cos1, t.P[i][0]) + effective_1d(cos1, t.P[i][1]);
    CHECK(std::abs(t.values[i] - want) <= 5e-3);
    if (t.P[i].norm() == 0.0) CHECK(std::abs(t.values[i] - 2.0) <= 2e-3);
  }
  CHECK(t.certificates.convex);
  CHECK(t.certificates.even_defect <= 1e-8);
  CHECK(t.certificates.bounds_ok);
}

TEST_CASE("bounds") {
  const PhaseSpaceFunction H = mechanical_symbol(cos1 + sine_mode({3}, 0.5));
  const Real maxv = hbar_lower_bound(H);
  // The discrete plateau is max V over grid nodes, so the grid must resolve the peak.
  CellOptions o;
  o.grid = 256;
  for (Real P : {0.0, 1.0, 2.5}) {
    const HbarBounds b = hbar_bounds(H, vec({P}));
    CHECK(b.lower == doctest::Approx(maxv));
    CHECK(b.upper == doctest::Approx(0.5 * P * P + maxv));
    const Real v = cell_problem_solve(H, vec({P}), o).value;
    CHECK(v >= b.lower - 5e-4);
    CHECK(v <= b.upper + 1e-6);
  }
}

TEST_CASE("inf-sup upper bounds") {
  const InfSupResult z = infsup_upper(mechanical_symbol(FourierPotential(1)), vec({1.5}));
  CHECK(z.value == doctest::Approx(1.125).epsilon(1e-12));
  const InfSupResult c0 = infsup_upper(mechanical_symbol(cos1), vec({0.0}));
  CHECK(std::abs(c0.value - 1.0) <= 1e-2);
  CHECK(c0.value >= 1.0 - 1e-12);
  const Real ref = effective_1d(cos1, 2.0);
  const InfSupResult c2 = infsup_upper(mechanical_symbol(cos1), vec({2.0}));
  CHECK(std::abs(c2.value - ref) <= 1e-2);
  CHECK(c2.value >= ref - 1e-6);
  InfSupOptions wide;
  wide.bandwidth = 5;
  CHECK_THROWS_AS(infsup_upper(mechanical_symbol(cos1), vec({0.0}), wide), ValidationError);
}

TEST_CASE("invariance under symplectic maps") {
  const PhaseSpaceFunction H = mechanical_symbol(cos1);
  const std::vector<RealVector> P = {vec({0.0}), vec({1.0}), vec({2.0})};
  const InvarianceReport id = invariance_check(H, time_one_map(constant_symbol(1, 0.0), 1e-2), P);
  CHECK(id.max_distance <= 2e-3);
  const InvarianceReport tr = invariance_check(H, time_one_map(linear_momentum_symbol(vec({1.0})), 1e-2), P);
  CHECK(tr.max_distance <= 5e-3);
  const InvarianceReport fl = invariance_check(H, time_one_map(bump_symbol(sine_mode({1}, 0.1)), 1e-2), P);
  CHECK(fl.max_distance <= 1e-2);
  CHECK(fl.symplectic_defect <= 1e-4);
}

TEST_CASE("sublevel sets") {
  const EffectiveTable free = effective_grid(mechanical_symbol(FourierPotential(1)), {1, 3.0, 0.25},
                                             EffectiveMethod::ClosedForm);
  const SublevelSet s = sublevel_set(free, 2.0);
  CHECK(s.points.size() == 17);  // |P| <= 2
  CHECK(s.convex);
  const EffectiveTable cos = effective_grid(mechanical_symbol(cos1), {1, 3.0, 0.25}, EffectiveMethod::ClosedForm);
  const SublevelSet p = sublevel_set(cos, 1.0);
  for (const RealVector& q : p.points) CHECK(std::abs(q[0]) <= 4.0 / kPi);
  CHECK(p.points.size() == 11);
  const SublevelSet e = sublevel_set(cos, 0.5);
  CHECK(e.empty);
  CHECK(e.points.empty());
}

TEST_CASE("method names round trip") {
  for (EffectiveMethod m : {EffectiveMethod::ClosedForm, EffectiveMethod::CellProblem, EffectiveMethod::InfSupUpper})
    CHECK(parse_effective_method(effective_method_name(m)) == m);
  CHECK_THROWS_AS(parse_effective_method("bogus"), ValidationError);
  const PGridSpec g{2, 1.0, 0.5};
  CHECK(g.per_axis() == 5);
  const auto nodes = g.nodes();
  CHECK(nodes.size() == 25);
  CHECK(nodes[1][0] == -1.0);
  CHECK(nodes[1][1] == -0.5);
}
