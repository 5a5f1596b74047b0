#pragma once

#include <memory>
#include <string>
#include <vector>

#include "isohom/common.hpp"
#include "isohom/dynamics.hpp"
#include "isohom/torus.hpp"
#include "isohom/weyl.hpp"

namespace isohom {

/// J(E) = (1/2pi) int_0^{2pi} sqrt(2(E - V(x))) dx for a one-dimensional potential,
/// defined for E >= max V. Caches max V and its location.
class ActionIntegral {
 public:
  explicit ActionIntegral(FourierPotential pot);

  const FourierPotential& potential() const { return pot_; }
  Real max_potential() const { return max_v_; }
  Real argmax() const { return argmax_; }

  /// Throws ValidationError below max V - 1e-12; clamps to max V within that slack.
  Real operator()(Real energy) const;
  /// J(max V): half-width of the plateau {H-bar = max V}.
  Real plateau_half_width() const { return plateau_; }
  /// H-bar(P): max V on |P| <= J(max V), otherwise J^{-1}(|P|).
  Real effective(Real momentum) const;

 private:
  FourierPotential pot_;
  Real max_v_;
  Real argmax_;
  Real plateau_;
};

Real action_J(const FourierPotential& pot, Real energy);
Real effective_1d(const FourierPotential& pot, Real momentum);

enum class CellScheme { Godunov, LaxFriedrichs };
std::string cell_scheme_name(CellScheme s);

/// Per-grid-point tabulation p -> H(x_i, p) by natural cubic splines, used for
/// numeric one-dimensional symbols whose evaluation is expensive.
class SliceTable {
 public:
  SliceTable(const PhaseSpaceFunction& H, int grid, Real bound, Real step);

  int grid() const { return grid_; }
  Real bound() const { return bound_; }
  /// Value and p-derivative at grid point i; falls back to direct evaluation off the table.
  Real value(int i, Real p) const;
  Real derivative(int i, Real p) const;
  /// argmin_p of slice i over the table and whether the samples are unimodal around it.
  Real argmin(int i) const { return argmin_[static_cast<std::size_t>(i)]; }
  bool unimodal() const { return unimodal_; }
  Real slice_min(int i) const { return value(i, argmin(i)); }

 private:
  const PhaseSpaceFunction* symbol_;  // for off-table fallback; must outlive the table
  int grid_;
  Real bound_;
  Real step_;
  int samples_;
  std::vector<RealVector> values_;
  std::vector<RealVector> second_;
  std::vector<Real> argmin_;
  bool unimodal_ = true;
};

struct CellOptions {
  int grid = 64;
  CellScheme scheme = CellScheme::Godunov;
  /// Discount factors delta used for the extrapolation -delta u_delta -> H-bar.
  std::vector<Real> discounts = {1e-3, 3e-4, 1e-4};
  Real newton_tol = 1e-10;    // target fixed-point residual
  Real accept_tol = 1e-6;     // non-convergence threshold
  int max_iterations = 100000;
  /// Lax-Friedrichs dissipation per axis; 0 picks max |dH/dp_i| over the probe box.
  Real lf_sigma = 0.0;
  /// Half-width and spacing of the p tabulation for numeric 1D symbols; 0 picks |P| + 4.
  Real table_bound = 0.0;
  Real table_step = 0.02;
  /// Optional precomputed tabulation of the symbol (must match grid).
  std::shared_ptr<const SliceTable> slices;
};

/// Discrete corrector u on the grid (mean zero) and the residual
/// sup |H_num(x, P + Du) - H-bar| of the discrete cell equation.
struct Corrector {
  RealVector P;
  int grid = 0;
  RealVector u;
  Real residual = 0.0;
  Real fixed_point_residual = 0.0;  // sup |delta u + H_num| at the smallest delta
};

struct CellSolution {
  Real value = 0.0;  // H-bar(P)
  Corrector corrector;
  std::vector<Real> discounts;
  std::vector<Real> estimates;  // max_x(-delta u_delta) per discount
  int newton_iterations = 0;
  CellScheme scheme = CellScheme::Godunov;
  bool unimodal = true;
};

/// Vanishing-discount solution of the cell problem H(x, P + Du) = H-bar with a
/// monotone numerical Hamiltonian and semismooth Newton. Godunov needs a mechanical
/// symbol (any n) or n = 1; Lax-Friedrichs takes any symbol.
/// Throws ConvergenceError when the fixed point stalls above accept_tol.
CellSolution cell_problem_solve(const PhaseSpaceFunction& H, const RealVector& P, const CellOptions& opts = {});

/// Lower and upper bounds for H-bar(P): max_x min_p H and max_x H(x, P).
struct HbarBounds {
  Real lower = 0.0;
  Real upper = 0.0;
};
HbarBounds hbar_bounds(const PhaseSpaceFunction& H, const RealVector& P, int grid = 256);
/// max V for mechanical symbols; max over grid x of min_p H for numeric 1D symbols
/// (p searched in [-10, 10]); -inf otherwise.
Real hbar_lower_bound(const PhaseSpaceFunction& H, int grid = 256);
/// 1/2|P|^2 + max V for mechanical symbols; grid max of H(x, P) otherwise.
Real hbar_upper_bound(const PhaseSpaceFunction& H, const RealVector& P, int grid = 256);

/// Uniform P grid symmetric about 0: nodes -pmax + i dp per axis.
struct PGridSpec {
  int dim = 1;
  Real pmax = 3.0;
  Real dp = 0.25;
  int per_axis() const;
  std::vector<RealVector> nodes() const;  // lexicographic, first axis slowest
};

enum class EffectiveMethod { ClosedForm, CellProblem, InfSupUpper };
std::string effective_method_name(EffectiveMethod m);
EffectiveMethod parse_effective_method(const std::string& s);

struct EffectiveCertificates {
  bool convex = false;
  Real convexity_defect = 0.0;  // max H(P_i) - (H(P_{i-1}) + H(P_{i+1}))/2 along axes and diagonals
  Real even_defect = 0.0;       // max |H(-P) - H(P)|
  Real bound_defect = 0.0;      // max violation of lower <= H-bar <= upper
  bool bounds_ok = false;
};

struct EffectiveTable {
  PGridSpec spec;
  std::vector<RealVector> P;
  std::vector<Real> values;
  std::vector<Real> residuals;
  EffectiveMethod method = EffectiveMethod::ClosedForm;
  bool valid = true;
  std::string failure;
  EffectiveCertificates certificates;
};

inline constexpr Real kCertificateTol = 1e-6;

struct InfSupOptions {
  int bandwidth = 4;
  int max_evaluations = 20000;
  int grid = 128;
  unsigned long seed = 42;
};

EffectiveTable effective_grid(const PhaseSpaceFunction& H, const PGridSpec& spec, EffectiveMethod method,
                              const CellOptions& cell = {}, const InfSupOptions& infsup = {}, int jobs = 1);

/// Recomputes the certificates of a table against the bounds of H.
EffectiveCertificates certify(const EffectiveTable& table, const PhaseSpaceFunction& H);

struct InfSupResult {
  Real value = 0.0;  // sup over the grid of H(x, P + grad v) at the incumbent
  RealVector coefficients;
  int evaluations = 0;
};

/// Upper bound from the inf-sup formula over bandwidth-m trigonometric v (m <= 4):
/// coordinate search with shrinking step plus seeded random directions.
InfSupResult infsup_upper(const PhaseSpaceFunction& H, const RealVector& P, const InfSupOptions& opts = {});

struct InvarianceReport {
  std::vector<RealVector> P;
  std::vector<Real> hbar_original;
  std::vector<Real> hbar_mapped;
  Real max_distance = 0.0;
  Real symplectic_defect = 0.0;
};

/// max_P |H-bar of H o phi - H-bar of H| with both sides from the cell solver.
InvarianceReport invariance_check(const PhaseSpaceFunction& H, const SymplecticMap& phi,
                                  const std::vector<RealVector>& P, const CellOptions& opts = {},
                                  int defect_probes = 20);

struct SublevelSet {
  Real energy = 0.0;
  std::vector<RealVector> points;
  std::vector<std::size_t> indices;  // into the table
  bool empty = false;
  bool convex = true;  // no grid point outside whose segment endpoints are inside
};

SublevelSet sublevel_set(const EffectiveTable& table, Real energy);

}  // namespace isohom
