#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "isohom/errors.hpp"
#include "isohom/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace isohom;

namespace {

// Flat JSON object -> config items; arrays become comma lists so every list flag
// accepts both "1,0.5" and [1, 0.5].
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}\n"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    nlohmann::json j;
    try {
      input >> j;
    } catch (const nlohmann::json::exception& e) {
      throw CLI::ConversionError("config: " + std::string(e.what()));
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, v] : j.items()) {
      CLI::ConfigItem item;
      item.name = key;
      item.inputs.push_back(scalar_text(v));
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  static std::string scalar_text(const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + scalar_text(v[i]);
      return s;
    }
    return v.dump();
  }
};

struct Options {
  std::string potential;
  std::string hbar;
  std::string K = "auto";
  double pmax = 3.0;
  double dp = 0.25;
  int grid = 64;
  int mu = 0;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  std::string out = "isohom_out";
  unsigned long seed = 42;
  std::string method;
  std::string pair;
  std::string with;
  std::string window;
  double energy = 5.0;
  double t = 1.0;
  std::string symbol;
  std::string P = "0";
  long samples = 100000;
  double tail_tol = kDefaultTailTolerance;
};

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ValidationError(std::string("--") + what + ": bad number '" + item + "'");
    }
    if (used != item.size()) throw ValidationError(std::string("--") + what + ": bad number '" + item + "'");
    v.push_back(x);
  }
  if (v.empty()) throw ValidationError(std::string("--") + what + " is empty");
  return v;
}

std::vector<double> hbar_list(const Options& o, const std::string& fallback = "") {
  const std::string s = o.hbar.empty() ? fallback : o.hbar;
  if (s.empty()) throw ValidationError("--hbar is required");
  const auto v = parse_list(s, "hbar");
  for (double h : v)
    if (!(h > 0.0 && h <= 1.0)) throw ValidationError("--hbar values must lie in (0, 1]");
  return v;
}

CutoffRule cutoff_rule(const Options& o) {
  if (o.K == "auto") return CutoffRule{};
  std::size_t used = 0;
  int k = 0;
  try {
    k = std::stoi(o.K, &used);
  } catch (const std::exception&) {
    throw ValidationError("--K must be an integer or 'auto'");
  }
  if (used != o.K.size() || k < 0) throw ValidationError("--K must be a non-negative integer or 'auto'");
  return CutoffRule::fixed(k);
}

FourierPotential potential(const Options& o, io::Manifest& m) {
  if (o.potential.empty()) throw ValidationError("--potential is required");
  const std::string text = io::read_file(o.potential);
  m.input_files.push_back(text);
  return io::parse_potential(text);
}

SpectrumOptions spectrum_options(const Options& o) {
  if (!(o.tail_tol > 0.0)) throw ValidationError("--tail-tol must be positive");
  SpectrumOptions s;
  s.tail_tolerance = o.tail_tol;
  return s;
}

void validate_common(const Options& o) {
  if (o.jobs < 1) throw ValidationError("--jobs must be positive");
  if (o.grid < 8) throw ValidationError("--grid must be at least 8");
  if (!(o.pmax >= 0.0) || !(o.dp > 0.0)) throw ValidationError("--pmax must be >= 0 and --dp > 0");
}

// Writes one artifact and records it for the manifest.
void emit(const fs::path& dir, const std::string& name, const std::string& content, io::Manifest& m) {
  io::write_file(dir / name, content);
  m.outputs.push_back(name);
}

std::string indexed(const std::string& stem, std::size_t i, std::size_t n, const std::string& ext) {
  return n == 1 ? stem + ext : stem + "_" + std::to_string(i) + ext;
}

void run_spectrum(const Options& o, const fs::path& dir, io::Manifest& m) {
  const FourierPotential pot = potential(o, m);
  const auto hbars = hbar_list(o);
  const CutoffRule rule = cutoff_rule(o);
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    const SpectrumResult s = compute_spectrum(pot, hbars[i], rule.cutoff(hbars[i], pot.bandwidth()), spectrum_options(o));
    const std::string name = indexed("spectrum", i, hbars.size(), ".csv");
    emit(dir, name, io::spectrum_csv(s), m);
    summary.push_back({{"hbar", s.hbar},
                       {"K", s.cutoff},
                       {"size", s.eigenvalues.size()},
                       {"trusted_energy", io::format_real(s.trusted_energy)},
                       {"tail_tolerance", s.tail_tolerance},
                       {"file", name}});
  }
  emit(dir, "spectrum.json", summary.dump(2) + "\n", m);
}

void run_weyl_count(const Options& o, const fs::path& dir, io::Manifest& m) {
  const FourierPotential pot = potential(o, m);
  const auto hbars = hbar_list(o);
  if (o.window.empty()) throw ValidationError("--window a,b is required");
  const auto w = parse_list(o.window, "window");
  if (w.size() != 2) throw ValidationError("--window takes exactly two values");
  const WeylCountReport r = weyl_count(pot, hbars, w[0], w[1], cutoff_rule(o), o.samples, o.seed);
  emit(dir, "weyl_count.csv", io::weyl_count_csv(r), m);
  nlohmann::ordered_json j{{"a", r.a},
                           {"b", r.b},
                           {"volume", r.volume},
                           {"volume_error", r.volume_error},
                           {"remainder_constant", r.remainder_constant}};
  if (pot.dim() == 1 && hbars.size() >= 3) {
    const WeylInvariantReport inv = weyl_first_invariant(pot, hbars, w[1], cutoff_rule(o), spectrum_options(o));
    j["first_invariant"] = {{"energy", inv.energy},
                            {"intercept", inv.intercept},
                            {"intercept_error", inv.intercept_error},
                            {"slope", inv.slope}};
  }
  emit(dir, "weyl_count.json", j.dump(2) + "\n", m);
}

EffectiveMethod method_for(const Options& o, int dim) {
  if (!o.method.empty()) return parse_effective_method(o.method);
  return dim == 1 ? EffectiveMethod::ClosedForm : EffectiveMethod::CellProblem;
}

void run_effective(const Options& o, const fs::path& dir, io::Manifest& m) {
  const FourierPotential pot = potential(o, m);
  const PGridSpec spec{pot.dim(), o.pmax, o.dp};
  CellOptions cell;
  cell.grid = o.grid;
  InfSupOptions infsup;
  infsup.seed = o.seed;
  const EffectiveTable t = effective_grid(mechanical_symbol(pot), spec, method_for(o, pot.dim()), cell, infsup, o.jobs);
  emit(dir, "effective.csv", io::effective_csv(t), m);
  emit(dir, "certificates.json", io::certificates_json(t), m);
  if (!t.valid) throw ConvergenceError("effective: " + t.failure, 0.0);
}

void run_cell_solve(const Options& o, const fs::path& dir, io::Manifest& m) {
  const FourierPotential pot = potential(o, m);
  const auto p = parse_list(o.P, "P");
  if (static_cast<int>(p.size()) != pot.dim()) throw ValidationError("--P must have one entry per dimension");
  RealVector P = Eigen::Map<const RealVector>(p.data(), pot.dim());
  CellOptions cell;
  cell.grid = o.grid;
  const CellSolution s = cell_problem_solve(mechanical_symbol(pot), P, cell);
  nlohmann::ordered_json j{{"P", p},
                           {"Hbar", s.value},
                           {"residual", s.corrector.residual},
                           {"fixed_point_residual", s.corrector.fixed_point_residual},
                           {"discounts", s.discounts},
                           {"estimates", s.estimates},
                           {"newton_iterations", s.newton_iterations},
                           {"scheme", cell_scheme_name(s.scheme)},
                           {"grid", s.corrector.grid}};
  if (pot.dim() == 1) j["Hbar_closed_form"] = effective_1d(pot, p[0]);
  emit(dir, "cell.json", j.dump(2) + "\n", m);
  emit(dir, "corrector.csv", io::corrector_csv(s.corrector), m);
}

void run_egorov(const Options& o, const fs::path& dir, io::Manifest& m) {
  const FourierPotential pot = potential(o, m);
  const PhaseSpaceFunction b = mechanical_symbol(pot);
  // Default observable: cos x_1 cut off smoothly in momentum.
  Frequency q(static_cast<std::size_t>(pot.dim()), 0);
  q[0] = 1;
  PhaseSpaceFunction a = bump_symbol(cosine_mode(q));
  if (!o.symbol.empty()) {
    const std::string text = io::read_file(o.symbol);
    m.input_files.push_back(text);
    a = io::parse_symbol(text);
  }
  const auto hbars = hbar_list(o, "0.2,0.1,0.05,0.025");
  EgorovCutoffRule rule;
  if (o.K != "auto") rule = EgorovCutoffRule{1e9, 0.5, 1, cutoff_rule(o).min_cutoff};  // fixed K
  const EgorovReport r = egorov_scaling(a, b, o.t, hbars, rule, {}, o.jobs);
  emit(dir, "egorov.json", io::egorov_json(r), m);
}

void run_isospectral(const Options& o, const fs::path& dir, io::Manifest& m) {
  const IsospectralPair pair = [&] {
    if (!o.pair.empty()) {
      const auto colon = o.pair.rfind(':');
      if (colon == std::string::npos) throw ValidationError("--pair must look like FILE:TRANSFORM");
      const std::string text = io::read_file(o.pair.substr(0, colon));
      m.input_files.push_back(text);
      const FourierPotential pot = io::parse_potential(text);
      return make_isospectral_pair(pot, parse_transforms(o.pair.substr(colon + 1), pot.dim()));
    }
    if (o.with.empty()) throw ValidationError("isospectral-check needs --pair or --potential with --with");
    const FourierPotential p1 = potential(o, m);
    const std::string text = io::read_file(o.with);
    m.input_files.push_back(text);
    return user_pair(p1, io::parse_potential(text));
  }();
  Theorem2Options t;
  t.hbars = hbar_list(o, "1,0.5,0.25,0.1,0.05");
  t.cutoff_rule = cutoff_rule(o);
  t.p_grid = PGridSpec{pair.pot1.dim(), o.pmax, o.dp};
  t.energy_max = o.energy;
  t.cell.grid = o.grid;
  t.spectrum = spectrum_options(o);
  t.jobs = o.jobs;
  const Theorem2Report r = theorem2_check(pair, t);
  emit(dir, "theorem2.json", io::theorem2_json(r), m);
  emit(dir, "effective_1.csv", io::effective_csv(r.table1), m);
  emit(dir, "effective_2.csv", io::effective_csv(r.table2), m);
  nlohmann::ordered_json pj{{"provenance", pair.provenance},
                            {"hypothesis_verified", pair.hypothesis_verified},
                            {"probe_hbar", pair.probe_hbar},
                            {"probe_K", pair.probe_cutoff},
                            {"probe_distance", pair.probe_distance},
                            {"pot1", nlohmann::ordered_json::parse(io::potential_to_json(pair.pot1))},
                            {"pot2", nlohmann::ordered_json::parse(io::potential_to_json(pair.pot2))}};
  emit(dir, "pair.json", pj.dump(2) + "\n", m);
  if (!r.table1.valid || !r.table2.valid)
    throw ConvergenceError("isospectral-check: homogenization failed: " +
                               (r.table1.valid ? r.table2.failure : r.table1.failure),
                           0.0);
}

void run_bs(const Options& o, const fs::path& dir, io::Manifest& m) {
  const FourierPotential pot = potential(o, m);
  if (pot.dim() != 1) throw ValidationError("bs-reconstruct needs a one-dimensional potential");
  const auto hbars = hbar_list(o);
  const CutoffRule rule = cutoff_rule(o);
  nlohmann::ordered_json summary = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < hbars.size(); ++i) {
    const SpectrumResult s = compute_spectrum(pot, hbars[i], rule.cutoff(hbars[i], pot.bandwidth()), spectrum_options(o));
    const BSReconstruction r = bs_reconstruct(pot, s, o.mu);
    const std::string name = indexed("bs", i, hbars.size(), ".csv");
    emit(dir, name, io::bs_csv(r), m);
    summary.push_back({{"hbar", r.hbar},
                       {"K", s.cutoff},
                       {"mu", r.mu},
                       {"points", r.points.size()},
                       {"excluded_below_max_V", r.excluded_below},
                       {"cluster_flag", r.cluster_flag},
                       {"max_misfit", bs_max_misfit(r, -1e300, 1e300)},
                       {"file", name}});
  }
  emit(dir, "bs.json", summary.dump(2) + "\n", m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isohom: spectra, effective Hamiltonians and semiclassical checks on the flat torus"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with flag values; command-line flags take precedence");
  app.fallthrough();
  app.require_subcommand(1, 1);

  Options o;
  app.add_option("--potential", o.potential, "potential JSON file");
  app.add_option("--hbar", o.hbar, "comma-separated hbar list");
  app.add_option("--K", o.K, "plane-wave cutoff or 'auto'")->capture_default_str();
  app.add_option("--pmax", o.pmax, "P grid half-width")->capture_default_str();
  app.add_option("--dp", o.dp, "P grid spacing")->capture_default_str();
  app.add_option("--grid", o.grid, "cell-problem grid per axis")->capture_default_str();
  app.add_option("--mu", o.mu, "Maslov parameter")->capture_default_str();
  app.add_option("--jobs", o.jobs, "worker threads")->capture_default_str();
  app.add_option("--out", o.out, "output directory")->capture_default_str();
  app.add_option("--seed", o.seed, "random seed")->capture_default_str();
  app.add_option("--method", o.method, "closed-form | cell-problem | inf-sup-upper");
  app.add_option("--pair", o.pair, "FILE:TRANSFORM, e.g. cosx.json:translate=pi or v.json:reflect");
  app.add_option("--with", o.with, "second potential for a user-supplied pair");
  app.add_option("--window", o.window, "energy window a,b");
  app.add_option("--energy", o.energy, "energy ceiling E_max")->capture_default_str();
  app.add_option("--t", o.t, "Egorov time")->capture_default_str();
  app.add_option("--symbol", o.symbol, "observable symbol JSON for egorov");
  app.add_option("--P", o.P, "momentum vector for cell-solve")->capture_default_str();
  app.add_option("--samples", o.samples, "Monte Carlo samples for phase-space volumes")->capture_default_str();
  app.add_option("--tail-tol", o.tail_tol, "Fourier-tail tolerance of the trusted window")->capture_default_str();

  struct Sub {
    const char* name;
    const char* help;
    void (*run)(const Options&, const fs::path&, io::Manifest&);
  };
  const std::vector<Sub> subs = {
      {"spectrum", "eigenvalues of -1/2 hbar^2 Laplacian + V", run_spectrum},
      {"weyl-count", "eigenvalue counts against the phase-space volume", run_weyl_count},
      {"effective", "effective Hamiltonian on a P grid", run_effective},
      {"cell-solve", "cell problem at one P", run_cell_solve},
      {"egorov", "Egorov residual scaling", run_egorov},
      {"isospectral-check", "isospectral pair and equality of effective Hamiltonians", run_isospectral},
      {"bs-reconstruct", "Bohr-Sommerfeld reconstruction of the effective Hamiltonian", run_bs},
  };
  for (const auto& s : subs) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;
    std::cerr << app.help();
    try {
      io::write_file(fs::path(o.out) / "error.json", io::error_json(2, "usage", e.what()));
    } catch (const std::exception&) {
    }
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  io::Manifest manifest;
  const fs::path dir = o.out;
  int code = 0;
  std::string type, message;
  for (const auto& s : subs) {
    if (!app.got_subcommand(s.name)) continue;
    manifest.subcommand = s.name;
    for (const CLI::Option* opt : app.get_options()) {
      if (opt->get_name() == "--help" || opt->get_name() == "--config" || opt->get_name() == "--out" ||
          opt->get_name() == "--jobs")
        continue;
      const std::string v = opt->as<std::string>();
      if (!v.empty()) manifest.inputs[opt->get_name().substr(2)] = v;
    }
    try {
      validate_common(o);
      s.run(o, dir, manifest);
    } catch (const ValidationError& e) {
      code = 2, type = "validation", message = e.what();
    } catch (const ConvergenceError& e) {
      code = 3, type = "non-convergence", message = e.what();
    } catch (const FlowEscapeError& e) {
      code = 3, type = "flow-escape", message = e.what();
    } catch (const fs::filesystem_error& e) {
      code = 2, type = "io", message = e.what();
    } catch (const std::exception& e) {
      code = 1, type = "internal", message = e.what();
    }
  }
  manifest.exit_code = code;
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    if (code != 0) {
      std::cerr << "error (" << type << "): " << message << "\n";
      io::write_file(dir / "error.json", io::error_json(code, type, message));
    }
    io::write_file(dir / "manifest.json", io::manifest_json(manifest));
  } catch (const std::exception& e) {
    std::cerr << "cannot write to " << dir << ": " << e.what() << "\n";
    if (code == 0) code = 2;
  }
  return code;
}
