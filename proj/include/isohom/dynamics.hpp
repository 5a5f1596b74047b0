#pragma once

#include <string>
#include <vector>

#include "isohom/common.hpp"
#include "isohom/torus.hpp"
#include "isohom/weyl.hpp"

namespace isohom {

struct PhasePoint {
  TorusPoint x;
  RealVector p;

  PhasePoint(TorusPoint x_, RealVector p_);
  int dim() const { return x.dim(); }
};

/// Momentum magnitude beyond which a trajectory counts as escaped.
inline constexpr Real kEscapeMomentum = 1e3;

enum class FlowScheme { KickDriftKick, RungeKutta4 };

/// Kick-drift-kick when b = 1/2|p|^2 + V(x), classical RK4 otherwise.
FlowScheme scheme_for(const PhaseSpaceFunction& b);
std::string scheme_name(FlowScheme s);

struct FlowResult {
  /// End point in unwrapped coordinates (x not reduced mod 2pi).
  RealVector x;
  RealVector p;
  Real energy_drift = 0.0;  // max |b(z(s)) - b(z(0))| over the steps
  int steps = 0;
  FlowScheme scheme = FlowScheme::RungeKutta4;

  PhasePoint point() const { return {TorusPoint(x), p}; }
};

/// Integrate Hamilton's equations of b for time t (negative t runs backward) with
/// step at most h. Throws FlowEscapeError when |p| exceeds kEscapeMomentum.
FlowResult flow(const PhaseSpaceFunction& b, const RealVector& x0, const RealVector& p0, Real t, Real h,
                bool track_energy = true);
FlowResult flow(const PhaseSpaceFunction& b, const PhasePoint& z0, Real t, Real h, bool track_energy = true);

struct TrajectorySample {
  Real t;
  RealVector x;  // wrapped
  RealVector p;
  Real energy;
};

/// Samples of the flow at `samples` + 1 equally spaced times in [0, t].
std::vector<TrajectorySample> trajectory(const PhaseSpaceFunction& b, const PhasePoint& z0, Real t, Real h,
                                         int samples);

/// Time-one map of a generator; the inverse is the time -1 flow.
class SymplecticMap {
 public:
  SymplecticMap(PhaseSpaceFunction generator, Real h, bool inverse = false);

  const PhaseSpaceFunction& generator() const { return gen_; }
  Real step() const { return h_; }
  bool is_inverse() const { return inverse_; }
  FlowScheme scheme() const { return scheme_; }
  int dim() const { return gen_.dim(); }

  /// Unwrapped image of (x, p).
  void apply(const RealVector& x, const RealVector& p, RealVector& x_out, RealVector& p_out) const;
  PhasePoint operator()(const PhasePoint& z) const;
  SymplecticMap inverse() const { return SymplecticMap(gen_, h_, !inverse_); }

 private:
  PhaseSpaceFunction gen_;
  Real h_;
  bool inverse_;
  FlowScheme scheme_;
};

SymplecticMap time_one_map(const PhaseSpaceFunction& b, Real h);

/// z -> H(phi(z)); numeric-only symbol with unbounded bandwidth.
PhaseSpaceFunction compose_hamiltonian(const PhaseSpaceFunction& H, const SymplecticMap& phi);

struct FlowDiagnostics {
  Real energy_drift = 0.0;
  Real symplectic_defect = 0.0;
};

/// max |det D phi - 1| over seeded probes with x uniform on the torus and |p_i| <= pmax;
/// central differences with step 1e-5.
Real symplectic_defect(const SymplecticMap& phi, int probes, Real pmax = 3.0, unsigned long seed = 42);

FlowDiagnostics flow_diagnostics(const SymplecticMap& phi, int probes, Real pmax = 3.0, unsigned long seed = 42);

}  // namespace isohom
