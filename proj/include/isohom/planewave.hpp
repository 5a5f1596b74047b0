#pragma once

#include <optional>
#include <string>
#include <vector>

#include "isohom/common.hpp"
#include "isohom/torus.hpp"

namespace isohom {

/// Frequencies k in Z^n with |k|_inf <= cutoff, lexicographic order. The basis
/// functions are e_k(x) = (2pi)^{-n/2} exp(i k.x), orthonormal in L^2(T^n).
class PlaneWaveBasis {
 public:
  PlaneWaveBasis(int dim, int cutoff);

  int dim() const { return dim_; }
  int cutoff() const { return cutoff_; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(freqs_.size()); }
  const Frequency& operator[](Eigen::Index i) const { return freqs_[static_cast<std::size_t>(i)]; }
  const std::vector<Frequency>& frequencies() const { return freqs_; }
  std::optional<Eigen::Index> index_of(const Frequency& k) const;

 private:
  int dim_;
  int cutoff_;
  std::vector<Frequency> freqs_;
};

/// Galerkin matrix of -1/2 hbar^2 Laplacian + V on a plane-wave basis:
/// entry(k, m) = 1/2 hbar^2 |m|^2 [k == m] + c_{k-m}.
struct HamiltonianMatrix {
  Real hbar;
  PlaneWaveBasis basis;
  ComplexMatrix entries;
  FourierPotential potential;
};

HamiltonianMatrix assemble_hamiltonian(const FourierPotential& pot, Real hbar, int cutoff);

/// Default ceiling on the Fourier-tail bound (squared l2 mass outside the basis)
/// below which an energy counts as resolved by the cutoff.
inline constexpr Real kDefaultTailTolerance = 0.25;

struct SpectrumOptions {
  bool eigenvectors = false;
  Real tail_tolerance = kDefaultTailTolerance;
};

struct SpectrumResult {
  Real hbar = 0.0;
  int dim = 0;
  int cutoff = 0;
  RealVector eigenvalues;      // ascending, with multiplicity
  ComplexMatrix eigenvectors;  // columns match eigenvalues; empty unless requested
  Real trusted_energy = 0.0;   // energies strictly below are resolved per the tail bound
  Real tail_tolerance = kDefaultTailTolerance;
  Real min_potential = 0.0;
};

SpectrumResult eigen_spectrum(const HamiltonianMatrix& m, const SpectrumOptions& opts = {});
SpectrumResult compute_spectrum(const FourierPotential& pot, Real hbar, int cutoff,
                                const SpectrumOptions& opts = {});

/// Largest |M - M^*| entry.
template <typename Derived>
Real hermitian_defect(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Upper bound on sum_{|k|_inf > K} (||V - mean||_C0 / (1/2 hbar^2 |k|^2 - E))^2,
/// the Fourier tail of a normalized eigenfunction with eigenvalue E. Requires
/// 1/2 hbar^2 K^2 > E - mean, otherwise throws CutoffError. Infinite for n >= 4.
Real truncation_tail_bound(const FourierPotential& pot, Real hbar, int cutoff, Real energy);

/// Supremum of energies whose tail bound stays below tol; -inf when none.
Real trusted_energy(const FourierPotential& pot, Real hbar, int cutoff, Real tol);

/// Remainder estimate of the Fourier cutoff lemma for eigenvalues in (a, b):
/// cutoff |k|^2 <= g = 2 b hbar^-2 e^{1/hbar} and ||r|| <= C(b) e^{-1/(4 hbar)}.
struct CutoffLemmaBound {
  Real cutoff_radius_sq = 0.0;  // g(hbar)
  Real sup_factor = 0.0;        // sup_{0<h<=1} h^-2 e^{-1/(2h)}, evaluated numerically
  Real c_bar = 0.0;
  Real lattice_sum = 0.0;       // sum_{k != 0} |k|^-3
  Real c_b = 0.0;
  Real remainder_bound = 0.0;
};
CutoffLemmaBound cutoff_lemma_bound(const FourierPotential& pot, Real hbar, Real upper_energy);

struct EigenvalueCount {
  long count = 0;
  bool untrusted = false;  // window reaches past the trusted energy
};

/// Eigenvalues in the open window (a, b), with multiplicity.
EigenvalueCount count_eigenvalues(const SpectrumResult& spec, Real a, Real b);

struct VolumeEstimate {
  Real value = 0.0;
  Real standard_error = 0.0;
  bool empty = false;
  std::string method;  // "slice-quadrature" or "stratified-monte-carlo"
};

/// Phase-space volume of {a < 1/2|p|^2 + V(x) < b} in T^n x R^n.
VolumeEstimate weyl_volume(const FourierPotential& pot, Real a, Real b, long samples = 100000,
                           unsigned long seed = 42);

/// hbar -> K = clamp(ceil(scale / hbar), max(min_cutoff, bandwidth), max_cutoff).
struct CutoffRule {
  Real scale = 8.0;
  int min_cutoff = 1;
  int max_cutoff = 512;
  int cutoff(Real hbar, int bandwidth) const;
  static CutoffRule fixed(int k) { return {0.0, k, k}; }
};

struct WeylCountReport {
  std::vector<Real> hbar;
  Real a = 0.0;
  Real b = 0.0;
  std::vector<int> cutoffs;
  std::vector<long> counts;
  std::vector<bool> untrusted;
  std::vector<Real> scaled_counts;  // N (2 pi hbar)^n
  Real volume = 0.0;
  Real volume_error = 0.0;
  /// max_i |N_i (2 pi hbar_i)^n - Vol| / hbar_i
  Real remainder_constant = 0.0;
};

WeylCountReport weyl_count(const FourierPotential& pot, const std::vector<Real>& hbars, Real a,
                           Real b, const CutoffRule& rule, long samples = 100000,
                           unsigned long seed = 42);

}  // namespace isohom
