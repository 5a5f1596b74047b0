#include "isohom/planewave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "isohom/errors.hpp"
#include "isohom/quadrature.hpp"

namespace isohom {

PlaneWaveBasis::PlaneWaveBasis(int dim, int cutoff)
    : dim_(dim), cutoff_(cutoff), freqs_(frequency_box(dim, cutoff)) {}

std::optional<Eigen::Index> PlaneWaveBasis::index_of(const Frequency& k) const {
  if (static_cast<int>(k.size()) != dim_ || sup_norm(k) > cutoff_) return std::nullopt;
  Eigen::Index idx = 0;
  const int width = 2 * cutoff_ + 1;
  for (int v : k) idx = idx * width + (v + cutoff_);
  return idx;
}

HamiltonianMatrix assemble_hamiltonian(const FourierPotential& pot, Real hbar, int cutoff) {
  if (!(hbar > 0.0 && hbar <= 1.0)) throw ValidationError("assemble_hamiltonian: hbar must lie in (0, 1]");
  if (cutoff < pot.bandwidth())
    throw ValidationError("assemble_hamiltonian: cutoff below the potential bandwidth");
  PlaneWaveBasis basis(pot.dim(), cutoff);
  const Eigen::Index n = basis.size();
  ComplexMatrix h = ComplexMatrix::Zero(n, n);
  for (Eigen::Index m = 0; m < n; ++m) {
    h(m, m) = 0.5 * hbar * hbar * static_cast<Real>(squared_norm(basis[m]));
    for (const auto& [q, c] : pot.coefficients()) {
      Frequency k = basis[m];
      for (int i = 0; i < pot.dim(); ++i) k[i] += q[i];
      if (auto row = basis.index_of(k)) h(*row, m) += c;
    }
  }
  return {hbar, std::move(basis), std::move(h), pot};
}

SpectrumResult eigen_spectrum(const HamiltonianMatrix& m, const SpectrumOptions& opts) {
  const Real scale = std::max<Real>(1.0, m.entries.cwiseAbs().maxCoeff());
  if (hermitian_defect(m.entries) > 1e-12 * scale)
    throw ValidationError("eigen_spectrum: matrix is not Hermitian");

  SpectrumResult r;
  r.hbar = m.hbar;
  r.dim = m.basis.dim();
  r.cutoff = m.basis.cutoff();
  r.tail_tolerance = opts.tail_tolerance;
  const auto options = opts.eigenvectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly;

  // Even real potentials give real symmetric matrices; the real solver is faster.
  if (m.entries.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(m.entries.real(), options);
    if (es.info() != Eigen::Success) throw ConvergenceError("eigen_spectrum: eigensolver failed", 0.0);
    r.eigenvalues = es.eigenvalues();
    if (opts.eigenvectors) r.eigenvectors = es.eigenvectors().cast<Complex>();
  } else {
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m.entries, options);
    if (es.info() != Eigen::Success) throw ConvergenceError("eigen_spectrum: eigensolver failed", 0.0);
    r.eigenvalues = es.eigenvalues();
    if (opts.eigenvectors) r.eigenvectors = es.eigenvectors();
  }
  r.trusted_energy = trusted_energy(m.potential, m.hbar, r.cutoff, opts.tail_tolerance);
  r.min_potential = refined_extrema(m.potential).min_value;
  return r;
}

SpectrumResult compute_spectrum(const FourierPotential& pot, Real hbar, int cutoff,
                                const SpectrumOptions& opts) {
  return eigen_spectrum(assemble_hamiltonian(pot, hbar, cutoff), opts);
}

namespace {

Real shell_count(int dim, long s) {
  return std::pow(2.0 * s + 1.0, dim) - std::pow(2.0 * s - 1.0, dim);
}

}  // namespace

Real truncation_tail_bound(const FourierPotential& pot, Real hbar, int cutoff, Real energy) {
  if (!(hbar > 0.0)) throw ValidationError("truncation_tail_bound: hbar must be positive");
  const int n = pot.dim();
  const Real e = energy - pot.mean();
  const Real h2 = 0.5 * hbar * hbar;
  if (!(h2 * cutoff * cutoff > e))
    throw CutoffError("truncation_tail_bound: cutoff insufficient for energy " + std::to_string(energy));
  const Real amp = pot.oscillation_bound();
  if (amp == 0.0) return 0.0;
  if (n >= 4) return std::numeric_limits<Real>::infinity();

  // Shell |k|_inf = s holds shell_count(n, s) frequencies with |k|^2 >= s^2.
  const long first = cutoff + 1;
  const long last = first + 20000;
  Real sum = 0.0;
  for (long s = first; s <= last; ++s) {
    const Real gap = h2 * static_cast<Real>(s) * s - e;
    sum += shell_count(n, s) * (amp / gap) * (amp / gap);
  }
  // Remainder past the explicit shells: shell_count <= 2n (3s)^{n-1}, gap >= theta h2 s^2.
  const Real big = static_cast<Real>(last);
  const Real theta = e > 0.0 ? 1.0 - e / (h2 * big * big) : 1.0;
  const Real coef = 2.0 * n * std::pow(3.0, n - 1) * amp * amp / (h2 * h2 * theta * theta);
  sum += coef / ((4.0 - n) * std::pow(big, 4.0 - n));
  return sum;
}

Real trusted_energy(const FourierPotential& pot, Real hbar, int cutoff, Real tol) {
  if (!(tol > 0.0)) throw ValidationError("trusted_energy: tolerance must be positive");
  const Real h2 = 0.5 * hbar * hbar;
  const Real cap = h2 * cutoff * cutoff + pot.mean();
  const Real top = cap - 1e-12 * std::max<Real>(1.0, std::abs(cap));
  if (truncation_tail_bound(pot, hbar, cutoff, top) <= tol) return cap;
  Real lo = pot.mean() - pot.oscillation_bound();
  if (truncation_tail_bound(pot, hbar, cutoff, lo) > tol) return -std::numeric_limits<Real>::infinity();
  Real hi = top;
  for (int it = 0; it < 100 && hi - lo > 1e-12 * std::max<Real>(1.0, std::abs(hi)); ++it) {
    const Real mid = 0.5 * (lo + hi);
    if (truncation_tail_bound(pot, hbar, cutoff, mid) <= tol)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

namespace {

Real lattice_inverse_cube_sum(int dim) {
  if (dim == 1) return 2.0 * std::riemann_zeta(3.0);
  if (dim == 2) {
    static const Real cached = [] {
      // Direct sum over the square |k|_inf <= R plus the continuum remainder
      // outside the square of half-side R + 1/2, which integrates to 4 sqrt(2) / L.
      constexpr long R = 1000;
      Real s = 0.0;
      for (long i = -R; i <= R; ++i)
        for (long j = -R; j <= R; ++j) {
          if (i == 0 && j == 0) continue;
          const Real r2 = static_cast<Real>(i * i + j * j);
          s += 1.0 / (r2 * std::sqrt(r2));
        }
      return s + 4.0 * std::sqrt(2.0) / (R + 0.5);
    }();
    return cached;
  }
  throw ValidationError("cutoff_lemma_bound: sum |k|^-3 diverges for n >= 3");
}

}  // namespace

CutoffLemmaBound cutoff_lemma_bound(const FourierPotential& pot, Real hbar, Real upper_energy) {
  if (!(upper_energy > 0.0)) throw ValidationError("cutoff_lemma_bound: needs b > 0");
  if (!(hbar > 0.0 && hbar <= 1.0)) throw ValidationError("cutoff_lemma_bound: hbar must lie in (0, 1]");
  CutoffLemmaBound out;
  out.cutoff_radius_sq = 2.0 * upper_energy * std::exp(1.0 / hbar) / (hbar * hbar);

  // Golden-section search of h^-2 e^{-1/(2h)} on (0, 1]; log-concave there.
  auto f = [](Real h) { return -2.0 * std::log(h) - 0.5 / h; };
  Real lo = 1e-3, hi = 1.0;
  const Real g = 0.5 * (std::sqrt(5.0) - 1.0);
  Real c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  for (int it = 0; it < 200; ++it) {
    if (f(c) > f(d))
      hi = d;
    else
      lo = c;
    c = hi - g * (hi - lo);
    d = lo + g * (hi - lo);
  }
  out.sup_factor = std::exp(f(0.5 * (lo + hi)));
  out.c_bar = 4.0 / std::sqrt(2.0 * upper_energy) * out.sup_factor;
  out.lattice_sum = lattice_inverse_cube_sum(pot.dim());
  out.c_b = pot.sup_bound() * out.c_bar * std::sqrt(out.lattice_sum);
  out.remainder_bound = out.c_b * std::exp(-0.25 / hbar);
  return out;
}

EigenvalueCount count_eigenvalues(const SpectrumResult& spec, Real a, Real b) {
  if (!(a < b)) throw ValidationError("count_eigenvalues: window must satisfy a < b");
  EigenvalueCount out;
  for (Eigen::Index i = 0; i < spec.eigenvalues.size(); ++i) {
    const Real e = spec.eigenvalues[i];
    if (e > a && e < b) ++out.count;
  }
  out.untrusted = b > spec.trusted_energy;
  return out;
}

namespace {

// Points in [0, 2pi) where V crosses level, located by a grid scan and bisection.
std::vector<Real> level_crossings(const FourierPotential& pot, Real level) {
  constexpr int res = 4096;
  std::vector<Real> roots;
  auto g = [&](Real x) { return eval_potential(pot, RealVector::Constant(1, x)) - level; };
  const Real step = kTwoPi / res;
  Real x0 = 0.0, g0 = g(0.0);
  for (int i = 1; i <= res; ++i) {
    const Real x1 = step * i;
    const Real g1 = g(x1);
    if (g0 == 0.0) roots.push_back(x0);
    if ((g0 < 0.0 && g1 > 0.0) || (g0 > 0.0 && g1 < 0.0)) {
      Real lo = x0, hi = x1, glo = g0;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const Real mid = 0.5 * (lo + hi);
        const Real gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    g0 = g1;
  }
  return roots;
}

}  // namespace

VolumeEstimate weyl_volume(const FourierPotential& pot, Real a, Real b, long samples,
                           unsigned long seed) {
  if (samples < 10000) throw ValidationError("weyl_volume: samples must be >= 1e4");
  const ExtremaReport ext = refined_extrema(pot);
  VolumeEstimate out;
  if (!(b > a) || !(b > ext.min_value)) {
    out.empty = true;
    out.method = "empty";
    return out;
  }
  const int n = pot.dim();
  if (n == 1) {
    out.method = "slice-quadrature";
    auto width = [&](Real level, Real x) {
      const Real d = level - eval_potential(pot, RealVector::Constant(1, x));
      return d > 0.0 ? 2.0 * std::sqrt(2.0 * d) : 0.0;
    };
    std::vector<Real> breaks = level_crossings(pot, b);
    for (Real r : level_crossings(pot, a)) breaks.push_back(r);
    breaks.push_back(ext.argmin[0]);
    breaks.push_back(ext.argmax[0]);
    const auto q = integrate([&](Real x) { return width(b, x) - width(a, x); }, 0.0, kTwoPi,
                             1e-12, 1e-12, breaks, 20000);
    out.value = q.value;
    out.standard_error = q.error_estimate;
    return out;
  }

  // Stratified Monte Carlo over T^n x [-R, R]^n, R = sqrt(2 (b - min V)); strata
  // form a regular grid over all 2n coordinates.
  out.method = "stratified-monte-carlo";
  const int d = 2 * n;
  const Real radius = std::sqrt(2.0 * (b - ext.min_value));
  int per_axis = std::max(1, static_cast<int>(std::floor(std::pow(static_cast<Real>(samples) / 4.0, 1.0 / d))));
  long strata = 1;
  for (int i = 0; i < d; ++i) strata *= per_axis;
  const long per_stratum = std::max<long>(2, samples / strata);
  const Real box = std::pow(kTwoPi, n) * std::pow(2.0 * radius, n);
  const Real stratum_volume = box / static_cast<Real>(strata);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> unit(0.0, 1.0);
  Real total = 0.0, variance = 0.0;
  std::vector<int> cell(d, 0);
  RealVector x(n), p(n);
  for (long sidx = 0; sidx < strata; ++sidx) {
    long rem = sidx;
    for (int i = 0; i < d; ++i) {
      cell[i] = static_cast<int>(rem % per_axis);
      rem /= per_axis;
    }
    Real sum = 0.0, sum2 = 0.0;
    for (long k = 0; k < per_stratum; ++k) {
      for (int i = 0; i < n; ++i) {
        x[i] = kTwoPi * (cell[i] + unit(rng)) / per_axis;
        p[i] = -radius + 2.0 * radius * (cell[n + i] + unit(rng)) / per_axis;
      }
      const Real h = 0.5 * p.squaredNorm() + eval_potential(pot, x);
      const Real inside = (h > a && h < b) ? 1.0 : 0.0;
      sum += inside;
      sum2 += inside * inside;
    }
    const Real mean = sum / per_stratum;
    const Real var = std::max<Real>(0.0, sum2 / per_stratum - mean * mean) * per_stratum / (per_stratum - 1);
    total += stratum_volume * mean;
    variance += stratum_volume * stratum_volume * var / per_stratum;
  }
  out.value = total;
  out.standard_error = std::sqrt(variance);
  out.empty = total == 0.0;
  return out;
}

int CutoffRule::cutoff(Real hbar, int bandwidth) const {
  if (!(hbar > 0.0)) throw ValidationError("CutoffRule: hbar must be positive");
  const int lower = std::max(min_cutoff, bandwidth);
  if (max_cutoff < lower) throw ValidationError("CutoffRule: max_cutoff below the potential bandwidth");
  const int raw = scale > 0.0 ? static_cast<int>(std::ceil(scale / hbar)) : lower;
  return std::clamp(raw, lower, max_cutoff);
}

WeylCountReport weyl_count(const FourierPotential& pot, const std::vector<Real>& hbars, Real a,
                           Real b, const CutoffRule& rule, long samples, unsigned long seed) {
  if (hbars.empty()) throw ValidationError("weyl_count: empty hbar list");
  if (!(a < b)) throw ValidationError("weyl_count: window must satisfy a < b");
  WeylCountReport r;
  r.hbar = hbars;
  r.a = a;
  r.b = b;
  const VolumeEstimate vol = weyl_volume(pot, a, b, samples, seed);
  r.volume = vol.value;
  r.volume_error = vol.standard_error;
  for (Real h : hbars) {
    const int k = rule.cutoff(h, pot.bandwidth());
    const SpectrumResult spec = compute_spectrum(pot, h, k);
    const EigenvalueCount c = count_eigenvalues(spec, a, b);
    const Real scaled = static_cast<Real>(c.count) * std::pow(kTwoPi * h, pot.dim());
    r.cutoffs.push_back(k);
    r.counts.push_back(c.count);
    r.untrusted.push_back(c.untrusted);
    r.scaled_counts.push_back(scaled);
    r.remainder_constant = std::max(r.remainder_constant, std::abs(scaled - r.volume) / h);
  }
  return r;
}

}  // namespace isohom
