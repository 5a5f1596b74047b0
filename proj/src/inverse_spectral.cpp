#include "isohom/inverse_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "isohom/errors.hpp"

namespace isohom {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

Real parse_number(const std::string& s) {
  std::size_t used = 0;
  Real v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError("parse_transforms: bad number '" + s + "'");
  }
  if (used != s.size()) throw ValidationError("parse_transforms: bad number '" + s + "'");
  return v;
}

// Accepts "1.5", "pi", "-pi", "pi/2", "0.5pi", "2*pi", "3pi/4".
Real parse_angle(std::string s) {
  s = trim(s);
  if (s.empty()) throw ValidationError("parse_transforms: empty component");
  const auto at = s.find("pi");
  if (at == std::string::npos) return parse_number(s);
  std::string pre = s.substr(0, at);
  std::string post = s.substr(at + 2);
  if (!pre.empty() && pre.back() == '*') pre.pop_back();
  Real factor = 1.0;
  if (pre == "-") factor = -1.0;
  else if (pre == "+") factor = 1.0;
  else if (!pre.empty()) factor = parse_number(pre);
  Real divisor = 1.0;
  if (!post.empty()) {
    if (post[0] != '/') throw ValidationError("parse_transforms: bad angle '" + s + "'");
    divisor = parse_number(post.substr(1));
    if (divisor == 0.0) throw ValidationError("parse_transforms: division by zero in '" + s + "'");
  }
  return factor * kPi / divisor;
}

std::string fmt(Real v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int probe_cutoff(const FourierPotential& a, const FourierPotential& b) {
  const int bw = std::max(a.bandwidth(), b.bandwidth());
  return std::max(bw, a.dim() == 1 ? 16 : 8);
}

// Elementwise comparison of the full spectra; returns max relative gap.
Real full_relative_gap(const SpectrumResult& s1, const SpectrumResult& s2, Real* abs_gap) {
  Real rel = 0.0, gap = 0.0;
  for (Eigen::Index i = 0; i < s1.eigenvalues.size(); ++i) {
    const Real d = std::abs(s1.eigenvalues[i] - s2.eigenvalues[i]);
    gap = std::max(gap, d);
    rel = std::max(rel, d / (1.0 + std::abs(s1.eigenvalues[i])));
  }
  if (abs_gap) *abs_gap = gap;
  return rel;
}

IsospectralPair probed(FourierPotential p1, FourierPotential p2, std::string provenance) {
  if (p1.dim() != p2.dim()) throw ValidationError("isospectral pair: dimension mismatch");
  IsospectralPair pair{std::move(p1), std::move(p2), std::move(provenance)};
  pair.probe_hbar = 1.0;
  pair.probe_cutoff = probe_cutoff(pair.pot1, pair.pot2);
  const SpectrumResult s1 = compute_spectrum(pair.pot1, pair.probe_hbar, pair.probe_cutoff);
  const SpectrumResult s2 = compute_spectrum(pair.pot2, pair.probe_hbar, pair.probe_cutoff);
  const Real rel = full_relative_gap(s1, s2, &pair.probe_distance);
  pair.hypothesis_verified = rel <= kSpecTol;
  return pair;
}

}  // namespace

std::string PotentialTransform::describe() const {
  if (kind == Kind::Reflect) return "reflect";
  std::string s = "translate(";
  for (Eigen::Index i = 0; i < shift.size(); ++i) s += (i ? "," : "") + fmt(shift[i]);
  return s + ")";
}

std::vector<PotentialTransform> parse_transforms(const std::string& spec, int dim) {
  if (dim < 1) throw ValidationError("parse_transforms: dimension must be positive");
  std::vector<PotentialTransform> out;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, '+')) {
    part = trim(part);
    if (part == "reflect") {
      out.push_back(PotentialTransform::reflection());
      continue;
    }
    const std::string key = "translate=";
    if (part.rfind(key, 0) != 0) throw ValidationError("parse_transforms: unknown transform '" + part + "'");
    std::vector<Real> comps;
    std::stringstream cs(part.substr(key.size()));
    std::string c;
    while (std::getline(cs, c, ',')) comps.push_back(parse_angle(c));
    if (comps.size() == 1 && dim > 1) comps.resize(static_cast<std::size_t>(dim), 0.0);
    if (static_cast<int>(comps.size()) != dim)
      throw ValidationError("parse_transforms: translation has " + std::to_string(comps.size()) +
                            " components, expected " + std::to_string(dim));
    out.push_back(PotentialTransform::translation(Eigen::Map<RealVector>(comps.data(), dim)));
  }
  if (out.empty()) throw ValidationError("parse_transforms: empty transform");
  return out;
}

FourierPotential apply_transforms(const FourierPotential& pot, const std::vector<PotentialTransform>& ts) {
  FourierPotential out = pot;
  for (const auto& t : ts) {
    if (t.kind == PotentialTransform::Kind::Reflect) {
      out = reflect(out);
    } else {
      if (t.shift.size() != pot.dim()) throw ValidationError("apply_transforms: translation dimension mismatch");
      out = translate(out, TorusPoint(t.shift));
    }
  }
  return out;
}

IsospectralPair make_isospectral_pair(const FourierPotential& pot, const std::vector<PotentialTransform>& ts) {
  if (ts.empty()) throw ValidationError("make_isospectral_pair: no transform given");
  std::string prov;
  for (std::size_t i = 0; i < ts.size(); ++i) prov += (i ? "+" : "") + ts[i].describe();
  return probed(pot, apply_transforms(pot, ts), prov);
}

IsospectralPair user_pair(const FourierPotential& pot1, const FourierPotential& pot2) {
  return probed(pot1, pot2, "user-supplied");
}

SpectralComparison spectra_compare(const SpectrumResult& s1, const SpectrumResult& s2, Real a, Real b) {
  if (!(a <= b)) throw ValidationError("spectra_compare: window must satisfy a <= b");
  if (s1.dim != s2.dim) throw ValidationError("spectra_compare: dimension mismatch");
  if (b > s1.trusted_energy || b > s2.trusted_energy)
    throw CutoffError("spectra_compare: window upper end " + fmt(b) + " exceeds the trusted energy " +
                      fmt(std::min(s1.trusted_energy, s2.trusted_energy)));
  SpectralComparison c;
  c.window_lower = a;
  c.window_upper = b;
  auto inside = [&](Real e) { return e >= a && e <= b; };
  for (Eigen::Index i = 0; i < s1.eigenvalues.size(); ++i) c.count1 += inside(s1.eigenvalues[i]);
  for (Eigen::Index i = 0; i < s2.eigenvalues.size(); ++i) c.count2 += inside(s2.eigenvalues[i]);

  if (s1.eigenvalues.size() == s2.eigenvalues.size()) {
    // Same truncation: pair eigenvalues by global index over the union of window hits.
    for (Eigen::Index i = 0; i < s1.eigenvalues.size(); ++i) {
      const Real e1 = s1.eigenvalues[i], e2 = s2.eigenvalues[i];
      if (!inside(e1) && !inside(e2)) continue;
      const Real d = std::abs(e1 - e2);
      c.distance = std::max(c.distance, d);
      c.relative_distance = std::max(c.relative_distance, d / (1.0 + std::min(std::abs(e1), std::abs(e2))));
    }
    // A count difference is an edge effect only when every partner is within tolerance.
    if (c.count1 != c.count2 && c.relative_distance > kSpecTol) c.count_mismatch = true;
  } else {
    std::vector<Real> l1, l2;
    for (Eigen::Index i = 0; i < s1.eigenvalues.size(); ++i)
      if (inside(s1.eigenvalues[i])) l1.push_back(s1.eigenvalues[i]);
    for (Eigen::Index i = 0; i < s2.eigenvalues.size(); ++i)
      if (inside(s2.eigenvalues[i])) l2.push_back(s2.eigenvalues[i]);
    if (l1.size() != l2.size()) {
      c.count_mismatch = true;
    } else {
      for (std::size_t i = 0; i < l1.size(); ++i) {
        const Real d = std::abs(l1[i] - l2[i]);
        c.distance = std::max(c.distance, d);
        c.relative_distance = std::max(c.relative_distance, d / (1.0 + std::abs(l1[i])));
      }
    }
  }
  if (c.count_mismatch) {
    c.distance = std::numeric_limits<Real>::infinity();
    c.relative_distance = std::numeric_limits<Real>::infinity();
  }
  return c;
}

SpectralComparison spectra_compare(const IsospectralPair& pair, Real hbar, int cutoff, Real a, Real b) {
  const SpectrumResult s1 = compute_spectrum(pair.pot1, hbar, cutoff);
  const SpectrumResult s2 = compute_spectrum(pair.pot2, hbar, cutoff);
  return spectra_compare(s1, s2, a, b);
}

Real full_spectrum_distance(const IsospectralPair& pair, Real hbar, int cutoff) {
  const SpectrumResult s1 = compute_spectrum(pair.pot1, hbar, cutoff);
  const SpectrumResult s2 = compute_spectrum(pair.pot2, hbar, cutoff);
  Real gap = 0.0;
  full_relative_gap(s1, s2, &gap);
  return gap;
}

Theorem2Report theorem2_check(const IsospectralPair& pair, const Theorem2Options& opts) {
  const int n = pair.pot1.dim();
  if (pair.pot2.dim() != n) throw ValidationError("theorem2_check: dimension mismatch");
  if (n > 2) throw ValidationError("theorem2_check: only n = 1 and n = 2 are supported");
  if (opts.hbars.empty()) throw ValidationError("theorem2_check: empty hbar list");
  for (Real h : opts.hbars)
    if (!(h > 0.0 && h <= 1.0)) throw ValidationError("theorem2_check: hbar values must lie in (0, 1]");
  if (opts.p_grid.dim != n) throw ValidationError("theorem2_check: P grid dimension mismatch");

  Theorem2Report r;
  r.hbar = opts.hbars;

  // Effective Hamiltonians first: the P grid must lie inside the sublevel set of E_max.
  const EffectiveMethod method = n == 1 ? EffectiveMethod::ClosedForm : EffectiveMethod::CellProblem;
  r.eff_method = effective_method_name(method);
  r.eff_tol = n == 1 ? kEffTolClosedForm : kEffTolCellProblem;
  const PhaseSpaceFunction H1 = mechanical_symbol(pair.pot1);
  const PhaseSpaceFunction H2 = mechanical_symbol(pair.pot2);
  CellOptions cell = opts.cell;
  r.table1 = effective_grid(H1, opts.p_grid, method, cell, {}, opts.jobs);
  r.table2 = effective_grid(H2, opts.p_grid, method, cell, {}, opts.jobs);
  const bool tables_ok = r.table1.valid && r.table2.valid;
  if (tables_ok) {
    for (std::size_t i = 0; i < r.table1.values.size(); ++i) {
      if (r.table1.values[i] > opts.energy_max + 1e-12)
        throw ValidationError("theorem2_check: P grid leaves the sublevel set {H-bar <= " + fmt(opts.energy_max) +
                              "} (H-bar = " + fmt(r.table1.values[i]) + ")");
      r.eff_dist = std::max(r.eff_dist, std::abs(r.table1.values[i] - r.table2.values[i]));
    }
  } else {
    r.eff_dist = std::numeric_limits<Real>::quiet_NaN();
  }

  const int bw = std::max(pair.pot1.bandwidth(), pair.pot2.bandwidth());
  bool equal = true;
  for (Real h : opts.hbars) {
    const int K = opts.cutoff_rule.cutoff(h, bw);
    const SpectrumResult s1 = compute_spectrum(pair.pot1, h, K, opts.spectrum);
    const SpectrumResult s2 = compute_spectrum(pair.pot2, h, K, opts.spectrum);
    const Real lower = std::min(s1.min_potential, s2.min_potential) - 1.0;
    const Real upper = std::min({opts.energy_max, s1.trusted_energy, s2.trusted_energy});
    r.cutoffs.push_back(K);
    r.window_upper.push_back(upper);
    if (!(upper > lower)) {
      r.compared.push_back(0);
      r.spec_dist.push_back(0.0);
      r.spec_rel_dist.push_back(0.0);
      continue;
    }
    const SpectralComparison c = spectra_compare(s1, s2, lower, upper);
    r.compared.push_back(std::max(c.count1, c.count2));
    r.spec_dist.push_back(c.distance);
    r.spec_rel_dist.push_back(c.relative_distance);
    if (!(c.relative_distance <= kSpecTol)) equal = false;
  }
  // Empty windows carry no evidence; at least one hbar must compare something.
  r.spectra_equal = equal && std::any_of(r.compared.begin(), r.compared.end(), [](long c) { return c > 0; });
  r.pass = equal && tables_ok && r.eff_dist <= r.eff_tol;

  std::ostringstream note;
  note << "isospectrality sampled at hbar in {";
  for (std::size_t i = 0; i < r.hbar.size(); ++i) note << (i ? ", " : "") << fmt(r.hbar[i]);
  note << "} on windows E <= min(" << fmt(opts.energy_max) << ", trusted energy); pair " << pair.provenance
       << (pair.hypothesis_verified ? "" : " (hypothesis unverified)");
  if (!tables_ok) note << "; homogenization failed: " << (r.table1.valid ? r.table2.failure : r.table1.failure);
  for (long c : r.compared)
    if (c == 0) {
      note << "; some hbar values had an empty trusted window";
      break;
    }
  r.sampling_note = note.str();
  return r;
}

BSReconstruction bs_reconstruct(const FourierPotential& pot, const SpectrumResult& spec, int mu) {
  if (pot.dim() != 1 || spec.dim != 1) throw ValidationError("bs_reconstruct: needs a one-dimensional spectrum");
  BSReconstruction r;
  r.hbar = spec.hbar;
  r.mu = mu;
  const ActionIntegral J(pot);
  const Real maxv = J.max_potential();
  const Real hbar = spec.hbar;
  const RealVector& E = spec.eigenvalues;
  const Eigen::Index N = E.size();

  // Near-degenerate clusters in the used range.
  auto close = [&](Eigen::Index i) { return E[i + 1] - E[i] <= 1e-6 * hbar * (1.0 + std::abs(E[i])); };
  const Real floor = maxv + 1e-10 * (1.0 + std::abs(maxv));
  for (Eigen::Index i = 0; i + 1 < N; ++i) {
    if (E[i] <= floor || E[i + 1] >= spec.trusted_energy) continue;
    if (!close(i)) continue;
    if (i + 2 < N && close(i + 1)) r.cluster_flag = true;  // three or more
    if (i % 2 == 0 && i > 0) r.cluster_flag = true;         // straddles labels
  }

  for (Eigen::Index i = 0; i < N; ++i) {
    if (E[i] >= spec.trusted_energy) break;
    if (E[i] <= floor) {
      ++r.excluded_below;
      continue;
    }
    const int mag = static_cast<int>((i + 1) / 2);
    BSPoint p;
    p.ell = (i % 2 == 1) ? -mag : mag;
    const Real sign = p.ell > 0 ? 1.0 : (p.ell < 0 ? -1.0 : 0.0);
    p.P = p.ell * hbar - sign * mu * hbar / 4.0;
    p.E = E[i];
    p.hbar_closed_form = J.effective(p.P);
    p.misfit = std::abs(p.E - p.hbar_closed_form);
    r.points.push_back(p);
  }
  return r;
}

Real bs_max_misfit(const BSReconstruction& r, Real lo, Real hi) {
  Real m = 0.0;
  for (const auto& p : r.points)
    if (p.E >= lo && p.E <= hi) m = std::max(m, p.misfit);
  return m;
}

WeylInvariantReport weyl_first_invariant(const FourierPotential& pot, const std::vector<Real>& hbars, Real energy,
                                         const CutoffRule& rule, const SpectrumOptions& sopts) {
  if (pot.dim() != 1) throw ValidationError("weyl_first_invariant: needs a one-dimensional potential");
  if (hbars.size() < 3) throw ValidationError("weyl_first_invariant: need at least three hbar values");
  WeylInvariantReport r;
  r.energy = energy;
  r.hbar = hbars;
  for (Real h : hbars) {
    if (!(h > 0.0 && h <= 1.0)) throw ValidationError("weyl_first_invariant: hbar values must lie in (0, 1]");
    const int K = rule.cutoff(h, pot.bandwidth());
    const SpectrumResult s = compute_spectrum(pot, h, K, sopts);
    if (!(energy > s.min_potential)) throw ValidationError("weyl_first_invariant: energy must exceed min V");
    if (energy > s.trusted_energy)
      throw CutoffError("weyl_first_invariant: energy " + fmt(energy) + " exceeds the trusted energy " +
                        fmt(s.trusted_energy) + " at hbar " + fmt(h));
    const EigenvalueCount c = count_eigenvalues(s, s.min_potential - 1.0, energy);
    r.cutoffs.push_back(K);
    r.counts.push_back(c.count);
    r.scaled.push_back(static_cast<Real>(c.count) * h / 2.0);
  }
  const auto m = static_cast<Eigen::Index>(hbars.size());
  RealMatrix A(m, 2);
  RealVector y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    A(i, 0) = 1.0;
    A(i, 1) = hbars[static_cast<std::size_t>(i)];
    y[i] = r.scaled[static_cast<std::size_t>(i)];
  }
  const RealVector c = A.colPivHouseholderQr().solve(y);
  r.intercept = c[0];
  r.slope = c[1];
  if (m > 2) {
    const Real s2 = (A * c - y).squaredNorm() / static_cast<Real>(m - 2);
    const RealMatrix cov = s2 * (A.transpose() * A).inverse();
    r.intercept_error = std::sqrt(std::max(0.0, cov(0, 0)));
  }
  return r;
}

}  // namespace isohom
