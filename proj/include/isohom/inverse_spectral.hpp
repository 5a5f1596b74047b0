#pragma once

#include <string>
#include <vector>

#include "isohom/common.hpp"
#include "isohom/homogenization.hpp"
#include "isohom/planewave.hpp"
#include "isohom/torus.hpp"

namespace isohom {

/// One step of a symmetry transform: x -> x + a or x -> -x.
struct PotentialTransform {
  enum class Kind { Translate, Reflect } kind = Kind::Reflect;
  RealVector shift;  // translation vector for Translate

  static PotentialTransform translation(RealVector a) { return {Kind::Translate, std::move(a)}; }
  static PotentialTransform reflection() { return {Kind::Reflect, {}}; }
  std::string describe() const;
};

/// Parses "translate=pi,0", "reflect" or compositions joined by '+'. Components accept
/// decimal numbers and multiples of pi ("pi", "-pi/2", "0.5pi").
std::vector<PotentialTransform> parse_transforms(const std::string& spec, int dim);

FourierPotential apply_transforms(const FourierPotential& pot, const std::vector<PotentialTransform>& ts);

struct IsospectralPair {
  FourierPotential pot1;
  FourierPotential pot2;
  std::string provenance;         // e.g. "translate(3.14159,0)+reflect" or "user-supplied"
  bool hypothesis_verified = false;
  Real probe_distance = 0.0;      // spectral distance at the construction probe
  Real probe_hbar = 1.0;
  int probe_cutoff = 0;
};

/// Probe used at construction: hbar = 1, K = max(bandwidth, 16 in 1D or 8 in 2D+).
IsospectralPair make_isospectral_pair(const FourierPotential& pot, const std::vector<PotentialTransform>& ts);
/// Flags "hypothesis unverified" when the probe distance exceeds 1e-8 (1 + |E|).
IsospectralPair user_pair(const FourierPotential& pot1, const FourierPotential& pot2);

/// Relative isospectrality tolerance per eigenvalue: |dE| <= 1e-8 (1 + |E|).
inline constexpr Real kSpecTol = 1e-8;
inline constexpr Real kEffTolClosedForm = 2e-3;
inline constexpr Real kEffTolCellProblem = 5e-3;

struct SpectralComparison {
  Real distance = 0.0;            // max |E1 - E2| over the window; +inf on count mismatch
  Real relative_distance = 0.0;   // max |E1 - E2| / (1 + |E|)
  long count1 = 0;
  long count2 = 0;
  bool count_mismatch = false;
  Real window_lower = 0.0;
  Real window_upper = 0.0;
};

/// Compares the two sorted spectra on [a, b]. Throws CutoffError when b exceeds the
/// trusted energy of either spectrum. Count differences caused only by eigenvalues
/// within the tolerance of a window edge are not treated as mismatches.
SpectralComparison spectra_compare(const SpectrumResult& s1, const SpectrumResult& s2, Real a, Real b);
SpectralComparison spectra_compare(const IsospectralPair& pair, Real hbar, int cutoff, Real a, Real b);

/// Element-wise max |E1 - E2| over the complete truncated spectra at the same (hbar, K),
/// with no trust window. Exact symmetry pairs agree here at every truncation.
Real full_spectrum_distance(const IsospectralPair& pair, Real hbar, int cutoff);

struct Theorem2Options {
  std::vector<Real> hbars = {1.0, 0.5, 0.25, 0.1, 0.05};
  CutoffRule cutoff_rule{};
  PGridSpec p_grid{1, 3.0, 0.25};
  Real energy_max = 5.0;
  CellOptions cell{};
  SpectrumOptions spectrum{};
  int jobs = 1;
};

struct Theorem2Report {
  std::vector<Real> hbar;
  std::vector<int> cutoffs;
  std::vector<Real> window_upper;   // min(E_max, trusted energy)
  std::vector<long> compared;       // eigenvalues compared per hbar
  std::vector<Real> spec_dist;
  std::vector<Real> spec_rel_dist;
  bool spectra_equal = false;
  Real eff_dist = 0.0;
  Real eff_tol = 0.0;
  std::string eff_method;
  EffectiveTable table1;
  EffectiveTable table2;
  bool pass = false;
  std::string sampling_note;
};

Theorem2Report theorem2_check(const IsospectralPair& pair, const Theorem2Options& opts = {});

struct BSPoint {
  int ell = 0;
  Real P = 0.0;
  Real E = 0.0;
  Real hbar_closed_form = 0.0;
  Real misfit = 0.0;  // |E - H-bar(P)|
};

struct BSReconstruction {
  Real hbar = 0.0;
  int mu = 0;
  std::vector<BSPoint> points;  // eigenvalue order: E non-decreasing, |P| non-decreasing
  bool cluster_flag = false;    // a near-degenerate cluster of size > 2 or split across labels
  int excluded_below = 0;       // eigenvalues at or below max V
};

/// Labels the sorted eigenvalues by their global index i: |ell| = ceil(i / 2), odd i
/// negative, even i positive; keeps those above max V and inside the trusted window.
BSReconstruction bs_reconstruct(const FourierPotential& pot, const SpectrumResult& spec, int mu = 0);
/// Largest misfit among points with E in [lo, hi]; 0 when none.
Real bs_max_misfit(const BSReconstruction& r, Real lo, Real hi);

struct WeylInvariantReport {
  std::vector<Real> hbar;
  std::vector<int> cutoffs;
  std::vector<long> counts;
  std::vector<Real> scaled;  // N hbar / 2 = N (2 pi hbar) / (4 pi)
  Real energy = 0.0;
  Real intercept = 0.0;
  Real slope = 0.0;
  Real intercept_error = 0.0;  // standard error of the intercept
};

/// Linear extrapolation in hbar of N(hbar, min V, E) hbar / 2, which tends to
/// Vol{H <= E} / (4 pi) = J(E) above max V.
WeylInvariantReport weyl_first_invariant(const FourierPotential& pot, const std::vector<Real>& hbars, Real energy,
                                         const CutoffRule& rule = {}, const SpectrumOptions& sopts = {});

}  // namespace isohom
