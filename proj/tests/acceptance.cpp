// Runs the twelve acceptance criteria and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <thread>
#include <vector>

#include "isohom/dynamics.hpp"
#include "isohom/homogenization.hpp"
#include "isohom/inverse_spectral.hpp"
#include "isohom/io.hpp"
#include "isohom/planewave.hpp"
#include "isohom/semiclassics.hpp"
#include "isohom/weyl.hpp"

using namespace isohom;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << "[violated: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

int jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

RealVector vec(std::initializer_list<Real> v) {
  RealVector r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (Real x : v) r[i++] = x;
  return r;
}

const FourierPotential cos1 = cosine_mode({1});
const FourierPotential cos2 = cosine_mode({1, 0}) + cosine_mode({0, 1});

// Every table produced by the run, for criterion 6.
std::vector<std::pair<std::string, EffectiveTable>> g_tables;

void crit1(Outcome& o) {
  const SpectrumResult s = compute_spectrum(FourierPotential(1), 1.0, 8);
  std::vector<Real> want;
  for (int k = -8; k <= 8; ++k) want.push_back(0.5 * k * k);
  std::sort(want.begin(), want.end());
  Real err = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) err = std::max(err, std::abs(s.eigenvalues[static_cast<Eigen::Index>(i)] - want[i]));
  o.detail << "max error " << err << "; ";
  o.require(s.eigenvalues.size() == 17, "17 eigenvalues");
  o.require(err <= 1e-12, "error <= 1e-12");
}

void crit2(Outcome& o) {
  const FourierPotential v1 = cos1 + sine_mode({2}, 0.3);
  const FourierPotential v2 = cos2 + sine_mode({1, 1}, 0.4) + cosine_mode({0, 2}, 0.2);
  const std::vector<IsospectralPair> pairs = {
      make_isospectral_pair(v1, parse_transforms("translate=pi", 1)),
      make_isospectral_pair(v1, parse_transforms("reflect", 1)),
      make_isospectral_pair(v2, parse_transforms("translate=pi,0.5", 2)),
      make_isospectral_pair(v2, parse_transforms("reflect", 2)),
  };
  Real worst = 0.0;
  for (const IsospectralPair& p : pairs) {
    const int K = p.pot1.dim() == 1 ? 32 : 8;
    for (Real h : {1.0, 0.5, 0.1}) worst = std::max(worst, full_spectrum_distance(p, h, K));
  }
  o.detail << "max element-wise gap " << worst << " over 4 pairs x 3 hbar; ";
  o.require(worst <= 1e-10, "gap <= 1e-10");
}

void crit3(Outcome& o) {
  Theorem2Options one;
  one.hbars = {1.0, 0.5, 0.25, 0.1};
  one.p_grid = {1, 3.0, 0.25};
  one.jobs = jobs();
  const Theorem2Report a = theorem2_check(make_isospectral_pair(cos1, parse_transforms("translate=pi", 1)), one);
  g_tables.emplace_back("isospectral 1D pot1", a.table1);
  g_tables.emplace_back("isospectral 1D pot2", a.table2);
  o.detail << "1D: verdict " << (a.pass ? "pass" : "fail") << ", eff_dist " << a.eff_dist << "; ";
  o.require(a.pass, "1D verdict pass");
  o.require(a.eff_dist <= 2e-3, "1D eff_dist <= 2e-3");

  // In 2D the trusted window is non-empty only at hbar = 1 within a feasible cutoff.
  Theorem2Options two;
  two.hbars = {1.0};
  two.cutoff_rule = CutoffRule::fixed(16);
  two.p_grid = {2, 2.0, 1.0};
  two.cell.grid = 64;
  two.jobs = jobs();
  const Theorem2Report b = theorem2_check(make_isospectral_pair(cos2, parse_transforms("translate=pi,0", 2)), two);
  g_tables.emplace_back("isospectral 2D pot1", b.table1);
  g_tables.emplace_back("isospectral 2D pot2", b.table2);
  o.detail << "2D: verdict " << (b.pass ? "pass" : "fail") << ", spec_dist " << b.spec_dist[0] << " over "
           << b.compared[0] << " eigenvalues, eff_dist " << b.eff_dist << "; ";
  o.require(b.pass, "2D verdict pass");
  o.require(b.eff_dist <= 5e-3, "2D eff_dist <= 5e-3");
}

void crit4(Outcome& o) {
  const PhaseSpaceFunction H = mechanical_symbol(cos1);
  Real worst = 0.0;
  for (Real P : {0.0, 1.0, 1.5, 2.0, 3.0}) {
    const Real cell = cell_problem_solve(H, vec({P})).value;
    worst = std::max(worst, std::abs(cell - effective_1d(cos1, P)));
    if (P == 0.0) {
      o.detail << "H-bar(0) " << cell << "; ";
      o.require(std::abs(cell - 1.0) <= 2e-3, "plateau value 1 +- 2e-3");
    }
  }
  o.detail << "max |cell - closed| " << worst << "; ";
  o.require(worst <= 2e-3, "cell vs closed <= 2e-3");

  // Plateau edge from the cell solver: last P where H-bar stays at max V.
  Real lo = 1.0, hi = 1.5;
  for (int i = 0; i < 20; ++i) {
    const Real mid = 0.5 * (lo + hi);
    (cell_problem_solve(H, vec({mid})).value > 1.0 + 1e-6 ? hi : lo) = mid;
  }
  const Real closed = ActionIntegral(cos1).plateau_half_width();
  o.detail << "plateau half-width cell " << lo << ", closed " << closed << " (4/pi " << 4.0 / kPi << "); ";
  o.require(std::abs(lo - 4.0 / kPi) <= 1e-2, "cell plateau width 4/pi +- 1e-2");
  o.require(std::abs(closed - 4.0 / kPi) <= 1e-2, "closed plateau width 4/pi +- 1e-2");

  const PGridSpec g{1, 3.0, 0.25};
  g_tables.emplace_back("1D closed form", effective_grid(H, g, EffectiveMethod::ClosedForm));
  g_tables.emplace_back("1D cell problem", effective_grid(H, g, EffectiveMethod::CellProblem, {}, {}, jobs()));
}

void crit5(Outcome& o) {
  const EffectiveTable t =
      effective_grid(mechanical_symbol(cos2), {2, 2.0, 2.0}, EffectiveMethod::CellProblem, {}, {}, jobs());
  g_tables.emplace_back("2D separability", t);
  o.require(t.valid, "table valid");
  Real worst = 0.0;
  for (std::size_t i = 0; i < t.P.size(); ++i)
    worst = std::max(worst, std::abs(t.values[i] - effective_1d(cos1, t.P[i][0]) - effective_1d(cos1, t.P[i][1])));
  o.detail << t.P.size() << " nodes, max |H-bar - sum of 1D| " << worst << "; ";
  o.require(t.P.size() == 9, "9 grid points");
  o.require(worst <= 5e-3, "separability <= 5e-3");
}

void crit6(Outcome& o) {
  Real conv = 0.0, bound = 0.0, even = 0.0;
  for (const auto& [name, t] : g_tables) {
    const EffectiveCertificates& c = t.certificates;
    conv = std::max(conv, c.convexity_defect);
    bound = std::max(bound, c.bound_defect);
    even = std::max(even, c.even_defect);
    o.require(t.valid, name + " valid");
    o.require(c.convex && c.convexity_defect <= 1e-6, name + " midpoint convex");
    o.require(c.bounds_ok, name + " bounds");
  }
  o.detail << g_tables.size() << " tables, max convexity defect " << conv << ", max bound defect " << bound
           << ", max even defect " << even << "; ";
}

void crit7(Outcome& o) {
  const std::vector<Real> hs = {0.2, 0.1, 0.05, 0.025};
  const CutoffRule rule{10.0, 1, 512};
  const WeylCountReport w = weyl_count(cos1, hs, -2.0, 2.0, rule);
  o.detail << "Vol " << w.volume << ", C " << w.remainder_constant << "; ";
  for (bool u : w.untrusted) o.require(!u, "trusted windows");
  o.require(w.remainder_constant <= 20.0, "C <= 20");
  const WeylInvariantReport inv = weyl_first_invariant(cos1, hs, 2.0, rule);
  const Real J = action_J(cos1, 2.0);
  o.detail << "first invariant " << inv.intercept << " vs J(2) " << J << "; ";
  o.require(std::abs(inv.intercept - J) <= 5e-2, "invariant within 5e-2");
}

void crit8(Outcome& o) {
  const std::vector<Real> hs = {0.2, 0.1, 0.05, 0.025};
  const PhaseSpaceFunction a = bump_symbol(cos1);
  const EgorovReport f = egorov_scaling(a, kinetic_symbol(1), 1.0, hs, {}, {}, jobs());
  Real fmax = 0.0;
  for (Real r : f.residual) fmax = std::max(fmax, r);
  o.detail << "free max residual " << fmax << "; ";
  o.require(fmax <= 1e-8, "free residual <= 1e-8");
  const EgorovReport p = egorov_scaling(a, mechanical_symbol(cos1), 1.0, hs, {}, {}, jobs());
  o.detail << "pendulum residuals";
  for (std::size_t i = 0; i < hs.size(); ++i) o.detail << " " << p.residual[i] << "@K" << p.cutoffs[i];
  o.detail << ", slope " << p.slope << "; ";
  o.require(p.slope >= 0.8 && p.slope <= 1.5, "slope in [0.8, 1.5]");
}

void crit9(Outcome& o) {
  Real free = 0.0;
  for (Real h : {0.5, 0.1}) {
    const BSReconstruction r = bs_reconstruct(FourierPotential(1), compute_spectrum(FourierPotential(1), h, 40));
    for (const BSPoint& p : r.points) free = std::max(free, p.misfit / (1.0 + p.E));
  }
  o.detail << "free relative misfit " << free << "; ";
  o.require(free <= 1e-13, "free exact");
  const Real m1 = bs_max_misfit(bs_reconstruct(cos1, compute_spectrum(cos1, 0.1, 80)), 1.5, 3.0);
  const Real m2 = bs_max_misfit(bs_reconstruct(cos1, compute_spectrum(cos1, 0.05, 160)), 1.5, 3.0);
  o.detail << "misfit hbar=0.1 " << m1 << ", hbar=0.05 " << m2 << ", ratio " << m1 / m2 << "; ";
  o.require(m1 > 0.0 && m1 / m2 >= 3.0, "ratio >= 3");
}

void crit10(Outcome& o) {
  const SymplecticMap phi = time_one_map(bump_symbol(sine_mode({1}, 0.1)), 1e-3);
  const InvarianceReport r =
      invariance_check(mechanical_symbol(cos1), phi, {vec({0.0}), vec({1.0}), vec({2.0})});
  o.detail << "max |H-bar(H o phi) - H-bar(H)| " << r.max_distance << ", symplectic defect " << r.symplectic_defect
           << "; ";
  o.require(r.max_distance <= 1e-2, "invariance <= 1e-2");
  o.require(r.symplectic_defect <= 1e-4, "defect <= 1e-4");
}

ComplexVector random_state(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<Real> g;
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = Complex(g(rng), g(rng));
  return v / v.norm();
}

PhaseSpaceFunction random_symbol(std::mt19937_64& rng) {
  std::normal_distribution<Real> g;
  std::vector<SymbolTerm> terms;
  for (int q = 0; q <= 2; ++q)
    for (int p = 0; p <= 2; ++p) {
      const Complex c = q == 0 ? Complex(g(rng), 0.0) : Complex(g(rng), g(rng));
      terms.push_back({{q}, {p}, c});
      if (q != 0) terms.push_back({{-q}, {p}, std::conj(c)});
    }
  return polynomial_symbol(1, terms);
}

void crit11(Outcome& o) {
  std::mt19937_64 rng(42);
  const PlaneWaveBasis basis(1, 8);
  Real proj = 0.0;
  for (int i = 0; i < 20; ++i)
    proj = std::max(proj, projector_check(random_state(basis.size(), rng), random_state(basis.size(), rng), basis, 0.5));
  o.detail << "projector " << proj << "; ";
  o.require(proj <= 1e-9, "projector <= 1e-9");

  Real pair = 0.0;
  for (int i = 0; i < 50; ++i) {
    const PhaseSpaceFunction b = random_symbol(rng);
    const ComplexVector psi = random_state(basis.size(), rng);
    const WignerTable w = wigner_transform(psi, basis, 0.5, 40);
    pair = std::max(pair, std::abs(wigner_pairing(b, w, 0.5) - quadratic_form(weyl_matrix(b, 0.5, 8).entries, psi)));
  }
  o.detail << "pairing " << pair << "; ";
  o.require(pair <= 1e-8, "pairing <= 1e-8");

  // Bounded band-limited symbols: trigonometric in x times a smooth profile in eta.
  std::vector<RealVector> etas;
  for (int i = -40; i <= 40; ++i) etas.push_back(RealVector::Constant(1, 0.1 * i));
  std::normal_distribution<Real> g;
  Real ratio = 0.0;
  for (int i = 0; i < 10; ++i) {
    const FourierPotential x = cosine_mode({1}, g(rng)) + sine_mode({2}, g(rng)) + constant_potential(1, g(rng));
    const PhaseSpaceFunction b = i % 2 == 0 ? potential_symbol(x) : bump_symbol(x, 1.0 + 0.2 * i);
    const Real norm = operator_norm(weyl_matrix(b, 0.5, 8).entries).norm;
    const Real cv = cv_bound(symbol_derivative_norms(b, etas), 1);
    ratio = std::max(ratio, norm / cv);
    o.require(cv >= norm, "cv bound dominates");
  }
  o.detail << "max norm/cv " << ratio << "; ";
}

int run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(ISOHOM_CLI_PATH) + " " + args + " --out " + out.string() + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void crit12(Outcome& o) {
  const std::string data = ISOHOM_TEST_DATA;
  const std::vector<std::string> runs = {
      "spectrum --potential " + data + "/cosx.json --hbar 1,0.5,0.1 --K 32",
      "weyl-count --potential " + data + "/cos2d.json --hbar 1,0.5 --window -2,3 --samples 20000",
      "effective --potential " + data + "/cosx.json --method cell-problem --pmax 2 --dp 0.5",
      "bs-reconstruct --potential " + data + "/cosx.json --hbar 0.1 --K 80",
      "isospectral-check --pair " + data + "/cosx.json:reflect --hbar 1,0.5",
  };
  const fs::path root = fs::temp_directory_path() / "isohom_acceptance_determinism";
  int files = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const fs::path a = root / ("a" + std::to_string(i)), b = root / ("b" + std::to_string(i));
    fs::remove_all(a);
    fs::remove_all(b);
    o.require(run_cli(runs[i], a) == 0 && run_cli(runs[i], b) == 0, "exit 0: " + runs[i].substr(0, runs[i].find(' ')));
    if (!fs::exists(a)) continue;
    for (const auto& e : fs::directory_iterator(a)) {
      if (e.path().extension() != ".csv") continue;
      ++files;
      const fs::path other = b / e.path().filename();
      o.require(fs::exists(other) && io::read_file(e.path()) == io::read_file(other),
                "identical " + e.path().filename().string());
    }
  }
  fs::remove_all(root);
  o.detail << files << " CSV files compared byte for byte; ";
  o.require(files >= 5, "at least one CSV per run");
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<void(Outcome&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "free-operator exactness", 1, crit1},
      {2, "exact isospectrality", 30, crit2},
      {3, "equal H-bar for isospectral pairs", 300, crit3},
      {4, "homogenization oracle chain", 60, crit4},
      {5, "2D separability", 180, crit5},
      {6, "effective-table certificates", 1, crit6},
      {7, "Weyl law", 60, crit7},
      {8, "Egorov scaling", 300, crit8},
      {9, "Bohr-Sommerfeld reconstruction", 60, crit9},
      {10, "symplectic invariance", 120, crit10},
      {11, "quantization identities", 60, crit11},
      {12, "CLI determinism", 120, crit12},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail << "[exception: " << e.what() << "] ";
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    // Criterion 6 audits tables computed by earlier criteria, so it has no own budget.
    if (c.id != 6 && secs > c.budget_seconds) o.require(false, "time budget");
    if (!o.ok) ++failed;
    std::printf("%s %2d %-32s %8.2fs (budget %gs)  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs,
                c.budget_seconds, o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
