#include "isohom/dynamics.hpp"

#include <cmath>
#include <random>

#include "isohom/errors.hpp"

namespace isohom {

PhasePoint::PhasePoint(TorusPoint x_, RealVector p_) : x(std::move(x_)), p(std::move(p_)) {
  if (p.size() != x.dim()) throw ValidationError("PhasePoint: position and momentum dimensions differ");
}

FlowScheme scheme_for(const PhaseSpaceFunction& b) {
  return b.mechanical_potential() ? FlowScheme::KickDriftKick : FlowScheme::RungeKutta4;
}

std::string scheme_name(FlowScheme s) {
  return s == FlowScheme::KickDriftKick ? "kick-drift-kick" : "rk4";
}

namespace {

void check_escape(const RealVector& p) {
  if (!p.allFinite() || p.cwiseAbs().maxCoeff() > kEscapeMomentum)
    throw FlowEscapeError("flow: momentum left the escape guard |p| <= 1e3");
}

}  // namespace

FlowResult flow(const PhaseSpaceFunction& b, const RealVector& x0, const RealVector& p0, Real t, Real h,
                bool track_energy) {
  const int dim = b.dim();
  if (x0.size() != dim || p0.size() != dim) throw ValidationError("flow: dimension mismatch");
  if (!(h > 0.0 && h <= 1e-2)) throw ValidationError("flow: step must lie in (0, 1e-2]");
  if (!std::isfinite(t)) throw ValidationError("flow: time must be finite");
  FlowResult r;
  r.x = x0;
  r.p = p0;
  r.scheme = scheme_for(b);
  if (t == 0.0) return r;
  const int n = static_cast<int>(std::ceil(std::abs(t) / h - 1e-9));
  const Real dt = t / n;
  r.steps = n;
  const Real e0 = track_energy ? b.real_value(x0, p0) : 0.0;
  RealVector& x = r.x;
  RealVector& p = r.p;

  if (r.scheme == FlowScheme::KickDriftKick) {
    const FourierPotential& pot = *b.mechanical_potential();
    RealVector g = pot.gradient(x);
    for (int s = 0; s < n; ++s) {
      p -= 0.5 * dt * g;
      x += dt * p;
      g = pot.gradient(x);
      p -= 0.5 * dt * g;
      check_escape(p);
      if (track_energy) r.energy_drift = std::max(r.energy_drift, std::abs(b.real_value(x, p) - e0));
    }
    return r;
  }

  RealVector gx(dim), gp(dim);
  auto field = [&](const RealVector& xs, const RealVector& ps, RealVector& dx, RealVector& dp) {
    b.gradient(xs, ps, gx, gp);
    dx = gp;
    dp = -gx;
  };
  RealVector k1x(dim), k1p(dim), k2x(dim), k2p(dim), k3x(dim), k3p(dim), k4x(dim), k4p(dim);
  for (int s = 0; s < n; ++s) {
    field(x, p, k1x, k1p);
    field(x + 0.5 * dt * k1x, p + 0.5 * dt * k1p, k2x, k2p);
    field(x + 0.5 * dt * k2x, p + 0.5 * dt * k2p, k3x, k3p);
    field(x + dt * k3x, p + dt * k3p, k4x, k4p);
    x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
    p += dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
    check_escape(p);
    if (track_energy) r.energy_drift = std::max(r.energy_drift, std::abs(b.real_value(x, p) - e0));
  }
  return r;
}

FlowResult flow(const PhaseSpaceFunction& b, const PhasePoint& z0, Real t, Real h, bool track_energy) {
  return flow(b, z0.x.coords(), z0.p, t, h, track_energy);
}

std::vector<TrajectorySample> trajectory(const PhaseSpaceFunction& b, const PhasePoint& z0, Real t, Real h,
                                         int samples) {
  if (samples < 1) throw ValidationError("trajectory: need at least one sample interval");
  std::vector<TrajectorySample> out;
  RealVector x = z0.x.coords();
  RealVector p = z0.p;
  const Real dt = t / samples;
  out.push_back({0.0, TorusPoint(x).coords(), p, b.real_value(x, p)});
  for (int s = 1; s <= samples; ++s) {
    const FlowResult r = flow(b, x, p, dt, h, false);
    x = r.x;
    p = r.p;
    out.push_back({dt * s, TorusPoint(x).coords(), p, b.real_value(x, p)});
  }
  return out;
}

SymplecticMap::SymplecticMap(PhaseSpaceFunction generator, Real h, bool inverse)
    : gen_(std::move(generator)), h_(h), inverse_(inverse), scheme_(scheme_for(gen_)) {
  if (!(h > 0.0 && h <= 1e-2)) throw ValidationError("SymplecticMap: step must lie in (0, 1e-2]");
  if (!gen_.is_real()) throw ValidationError("SymplecticMap: generator must be real-valued");
}

void SymplecticMap::apply(const RealVector& x, const RealVector& p, RealVector& x_out, RealVector& p_out) const {
  FlowResult r = flow(gen_, x, p, inverse_ ? -1.0 : 1.0, h_, false);
  x_out = std::move(r.x);
  p_out = std::move(r.p);
}

PhasePoint SymplecticMap::operator()(const PhasePoint& z) const {
  RealVector xo, po;
  apply(z.x.coords(), z.p, xo, po);
  return {TorusPoint(xo), po};
}

SymplecticMap time_one_map(const PhaseSpaceFunction& b, Real h) { return SymplecticMap(b, h); }

PhaseSpaceFunction compose_hamiltonian(const PhaseSpaceFunction& H, const SymplecticMap& phi) {
  if (H.dim() != phi.dim()) throw ValidationError("compose_hamiltonian: dimension mismatch");
  return PhaseSpaceFunction(
      H.dim(),
      [H, phi](const RealVector& x, const RealVector& eta) {
        RealVector xo, po;
        phi.apply(x, eta, xo, po);
        return H(xo, po);
      },
      PhaseSpaceFunction::kUnbounded, H.is_real());
}

Real symplectic_defect(const SymplecticMap& phi, int probes, Real pmax, unsigned long seed) {
  if (probes < 10) throw ValidationError("symplectic_defect: need at least 10 probes");
  const int n = phi.dim();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> ux(0.0, kTwoPi), up(-pmax, pmax);
  constexpr Real step = 1e-5;
  Real worst = 0.0;
  RealVector z(2 * n), xo, po, xm, pm;
  for (int k = 0; k < probes; ++k) {
    for (int i = 0; i < n; ++i) {
      z[i] = ux(rng);
      z[n + i] = up(rng);
    }
    RealMatrix jac(2 * n, 2 * n);
    for (int c = 0; c < 2 * n; ++c) {
      RealVector zp = z, zm = z;
      zp[c] += step;
      zm[c] -= step;
      phi.apply(zp.head(n), zp.tail(n), xo, po);
      phi.apply(zm.head(n), zm.tail(n), xm, pm);
      jac.col(c).head(n) = (xo - xm) / (2 * step);
      jac.col(c).tail(n) = (po - pm) / (2 * step);
    }
    worst = std::max(worst, std::abs(jac.determinant() - 1.0));
  }
  return worst;
}

FlowDiagnostics flow_diagnostics(const SymplecticMap& phi, int probes, Real pmax, unsigned long seed) {
  FlowDiagnostics d;
  d.symplectic_defect = symplectic_defect(phi, probes, pmax, seed);
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<Real> ux(0.0, kTwoPi), up(-pmax, pmax);
  const int n = phi.dim();
  for (int k = 0; k < probes; ++k) {
    RealVector x(n), p(n);
    for (int i = 0; i < n; ++i) {
      x[i] = ux(rng);
      p[i] = up(rng);
    }
    const FlowResult r = flow(phi.generator(), x, p, phi.is_inverse() ? -1.0 : 1.0, phi.step(), true);
    d.energy_drift = std::max(d.energy_drift, r.energy_drift);
  }
  return d;
}

}  // namespace isohom
