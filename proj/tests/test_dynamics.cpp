#include "doctest.h"

#include <cmath>
#include <random>

#include "isohom/dynamics.hpp"
#include "isohom/errors.hpp"

using namespace isohom;

namespace {

RealVector vec(std::initializer_list<Real> v) {
  RealVector r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (Real x : v) r[i++] = x;
  return r;
}

const PhaseSpaceFunction& pendulum() {
  static const PhaseSpaceFunction b = mechanical_symbol(cosine_mode({1}));
  return b;
}

Real torus_gap(Real a, Real b) {
  const Real d = std::abs(wrap_angle(a) - wrap_angle(b));
  return std::min(d, kTwoPi - d);
}

}  // namespace

TEST_CASE("flow examples") {
  const FlowResult free = flow(kinetic_symbol(1), vec({0.0}), vec({1.0}), 1.0, 1e-2);
  CHECK(free.x[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(free.p[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(scheme_for(mechanical_symbol(FourierPotential(1))) == FlowScheme::KickDriftKick);

  const FlowResult top = flow(pendulum(), vec({kPi}), vec({0.0}), 1.0, 1e-3);
  CHECK(std::abs(top.x[0] - kPi) <= 1e-12);
  CHECK(std::abs(top.p[0]) <= 1e-12);

  const FlowResult coarse = flow(pendulum(), vec({0.0}), vec({2.0}), 1.0, 1e-3);
  const FlowResult fine = flow(pendulum(), vec({0.0}), vec({2.0}), 1.0, 1e-4);
  CHECK(std::abs(coarse.x[0] - fine.x[0]) <= 1e-6);
  CHECK(std::abs(coarse.p[0] - fine.p[0]) <= 1e-6);
}

TEST_CASE("non-separable symbols use the one-step method") {
  const PhaseSpaceFunction g = bump_symbol(sine_mode({1}, 0.1));
  CHECK(scheme_for(g) == FlowScheme::RungeKutta4);
  CHECK(scheme_for(pendulum()) == FlowScheme::KickDriftKick);
  const FlowResult a = flow(g, vec({0.4}), vec({0.2}), 1.0, 1e-2);
  const FlowResult b = flow(g, vec({0.4}), vec({0.2}), 1.0, 1e-3);
  CHECK(std::abs(a.x[0] - b.x[0]) <= 1e-9);
  CHECK(std::abs(a.p[0] - b.p[0]) <= 1e-9);
}

TEST_CASE("escape guard") {
  const PhaseSpaceFunction steep = mechanical_symbol(cosine_mode({1}, 1e6));
  CHECK_THROWS_AS(flow(steep, vec({kPi / 2}), vec({0.0}), 1.0, 1e-2), FlowEscapeError);
}

TEST_CASE("time-one map examples") {
  const SymplecticMap zero = time_one_map(constant_symbol(2, 0.0), 1e-2);
  const PhasePoint z({0.3, 5.0}, vec({1.0, -2.0}));
  const PhasePoint w = zero(z);
  CHECK(torus_gap(w.x[0], 0.3) <= 1e-14);
  CHECK(torus_gap(w.x[1], 5.0) <= 1e-14);
  CHECK((w.p - z.p).norm() <= 1e-14);

  const SymplecticMap drift = time_one_map(linear_momentum_symbol(vec({0.5, -1.5})), 1e-2);
  const PhasePoint d = drift(z);
  CHECK(torus_gap(d.x[0], 0.8) <= 1e-12);
  CHECK(torus_gap(d.x[1], 3.5) <= 1e-12);

  const SymplecticMap bump = time_one_map(bump_symbol(cosine_mode({1})), 1e-2);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<Real> ux(0.0, kTwoPi), up(1.0, 4.0), sign(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const RealVector x = vec({ux(rng)});
    const RealVector p = vec({std::copysign(up(rng), sign(rng))});
    RealVector xo, po;
    bump.apply(x, p, xo, po);
    CHECK(std::abs(xo[0] - x[0]) <= 1e-15);
    CHECK(std::abs(po[0] - p[0]) <= 1e-15);
  }
}

TEST_CASE("reversibility") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<Real> ux(0.0, kTwoPi), up(-3.0, 3.0);
  const Real h = 1e-2;
  for (const PhaseSpaceFunction& b : {pendulum(), bump_symbol(sine_mode({1}, 0.1))}) {
    const SymplecticMap phi = time_one_map(b, h);
    const SymplecticMap inv = phi.inverse();
    for (int i = 0; i < 100; ++i) {
      const RealVector x = vec({ux(rng)}), p = vec({up(rng)});
      RealVector x1, p1, x2, p2;
      phi.apply(x, p, x1, p1);
      inv.apply(x1, p1, x2, p2);
      CHECK(std::abs(x2[0] - x[0]) <= 10 * h * h);
      CHECK(std::abs(p2[0] - p[0]) <= 10 * h * h);
    }
  }
}

TEST_CASE("energy conservation") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<Real> ux(0.0, kTwoPi), up(-3.0, 3.0);
  for (Real h : {1e-2, 1e-3}) {
    for (int i = 0; i < 20; ++i) {
      const FlowResult r = flow(pendulum(), vec({ux(rng), }), vec({up(rng)}), 1.0, h);
      CHECK(r.energy_drift <= 100 * h * h);
    }
  }
  const PhaseSpaceFunction b2 = mechanical_symbol(cosine_mode({1, 0}) + cosine_mode({1, 1}, 0.5));
  const FlowResult r2 = flow(b2, vec({0.1, 0.2}), vec({1.0, -0.5}), 1.0, 1e-3);
  CHECK(r2.energy_drift <= 1e-4);
}

TEST_CASE("trajectory sampling") {
  const auto s = trajectory(pendulum(), PhasePoint({0.0}, vec({2.0})), 1.0, 1e-3, 10);
  REQUIRE(s.size() == 11);
  CHECK(s.front().t == 0.0);
  CHECK(s.back().t == doctest::Approx(1.0));
  const FlowResult end = flow(pendulum(), vec({0.0}), vec({2.0}), 1.0, 1e-3);
  CHECK(torus_gap(s.back().x[0], end.x[0]) <= 1e-10);
  for (const auto& p : s) {
    CHECK(p.x[0] >= 0.0);
    CHECK(p.x[0] < kTwoPi);
    CHECK(p.energy == doctest::Approx(3.0).epsilon(1e-5));
  }
}

TEST_CASE("compose_hamiltonian examples") {
  const PhaseSpaceFunction H = pendulum();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<Real> ux(0.0, kTwoPi), up(-2.0, 2.0);

  const PhaseSpaceFunction same = compose_hamiltonian(H, time_one_map(constant_symbol(1, 0.0), 1e-2));
  const PhaseSpaceFunction shifted = compose_hamiltonian(H, time_one_map(linear_momentum_symbol(vec({0.7})), 1e-2));
  const SymplecticMap phi = time_one_map(bump_symbol(sine_mode({1}, 0.1)), 1e-3);
  const PhaseSpaceFunction mapped = compose_hamiltonian(H, phi);
  CHECK(mapped.bandwidth() == PhaseSpaceFunction::kUnbounded);
  for (int i = 0; i < 20; ++i) {
    const RealVector x = vec({ux(rng)}), p = vec({up(rng)});
    CHECK(std::abs(same(x, p).real() - H(x, p).real()) <= 1e-14);
    CHECK(std::abs(shifted(x, p).real() - H(vec({x[0] + 0.7}), p).real()) <= 1e-12);
    RealVector xo, po;
    phi.apply(x, p, xo, po);
    CHECK(std::abs(mapped(x, p).real() - H(xo, po).real()) <= 1e-6);
  }
}

TEST_CASE("symplectic defect examples") {
  CHECK(symplectic_defect(time_one_map(constant_symbol(1, 0.0), 1e-2), 10) <= 1e-8);
  CHECK(symplectic_defect(time_one_map(linear_momentum_symbol(vec({1.0, 2.0})), 1e-2), 10) <= 1e-8);
  CHECK(symplectic_defect(time_one_map(pendulum(), 1e-3), 20) <= 1e-5);
  CHECK(symplectic_defect(time_one_map(bump_symbol(sine_mode({1}, 0.1)), 1e-3), 20) <= 1e-4);
  const FlowDiagnostics d = flow_diagnostics(time_one_map(pendulum(), 1e-3), 20);
  CHECK(d.energy_drift >= 0.0);
  CHECK(d.symplectic_defect >= 0.0);
  CHECK_THROWS_AS(symplectic_defect(time_one_map(pendulum(), 1e-3), 5), ValidationError);
}

TEST_CASE("step preconditions") {
  CHECK_THROWS_AS(flow(pendulum(), vec({0.0}), vec({0.0}), 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(flow(pendulum(), vec({0.0}), vec({0.0}), 1.0, 0.5), ValidationError);
  CHECK_THROWS_AS(flow(pendulum(), vec({0.0, 0.0}), vec({0.0}), 1.0, 1e-3), ValidationError);
}
