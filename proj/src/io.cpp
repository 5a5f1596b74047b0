#include "isohom/io.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "isohom/errors.hpp"
#include "json.hpp"

#ifndef ISOHOM_VERSION
#define ISOHOM_VERSION "unknown"
#endif

namespace isohom::io {

namespace {

using json = nlohmann::ordered_json;

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

Frequency read_frequency(const json& j, int dim, const char* what) {
  if (!j.is_array()) throw ValidationError(std::string(what) + ": \"q\" must be an array");
  Frequency q;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw ValidationError(std::string(what) + ": frequency components must be integers");
    q.push_back(v.get<int>());
  }
  if (static_cast<int>(q.size()) != dim)
    throw ValidationError(std::string(what) + ": frequency of length " + std::to_string(q.size()) +
                          " in dimension " + std::to_string(dim));
  return q;
}

Real read_real(const json& obj, const char* key, const char* what) {
  if (!obj.contains(key)) return 0.0;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(std::string(what) + ": \"" + key + "\" must be a number");
  const Real r = v.get<Real>();
  if (!std::isfinite(r)) throw ValidationError(std::string(what) + ": non-finite coefficient");
  return r;
}

int read_dim(const json& j, const char* what) {
  if (!j.contains("dim") || !j.at("dim").is_number_integer())
    throw ValidationError(std::string(what) + ": missing integer \"dim\"");
  const int d = j.at("dim").get<int>();
  if (d < 1 || d > 3) throw ValidationError(std::string(what) + ": dim must be 1, 2 or 3");
  return d;
}

// Finite numbers as numbers, the rest as strings so the JSON stays lossless.
json jnum(Real v) {
  if (std::isfinite(v)) return v;
  return format_real(v);
}

json jvec(const std::vector<Real>& v) {
  json a = json::array();
  for (Real x : v) a.push_back(jnum(x));
  return a;
}

std::string axis_header(const std::string& name, int dim) {
  if (dim == 1) return name;
  std::string s;
  for (int i = 1; i <= dim; ++i) s += (i > 1 ? "," : "") + name + std::to_string(i);
  return s;
}

std::string csv_reals(const RealVector& v) {
  std::string s;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_real(v[i]);
  return s;
}

std::string csv_ints(const Frequency& q) {
  std::string s;
  for (std::size_t i = 0; i < q.size(); ++i) s += (i ? "," : "") + std::to_string(q[i]);
  return s;
}

std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

}  // namespace

FourierPotential parse_potential(const std::string& text) {
  const json j = parse_json(text, "potential");
  if (!j.is_object()) throw ValidationError("potential: top level must be an object");
  const int dim = read_dim(j, "potential");
  if (!j.contains("coeffs") || !j.at("coeffs").is_array()) throw ValidationError("potential: missing \"coeffs\" array");
  FourierPotential::CoefficientMap coeffs;
  for (const auto& c : j.at("coeffs")) {
    if (!c.is_object() || !c.contains("q")) throw ValidationError("potential: each coefficient needs \"q\"");
    const Frequency q = read_frequency(c.at("q"), dim, "potential");
    if (sup_norm(q) > kMaxFileFrequency)
      throw ValidationError("potential: |q|_inf exceeds " + std::to_string(kMaxFileFrequency));
    if (coeffs.count(q)) throw ValidationError("potential: duplicate frequency " + csv_ints(q));
    coeffs[q] = Complex(read_real(c, "re", "potential"), read_real(c, "im", "potential"));
  }
  return FourierPotential(dim, std::move(coeffs));
}

FourierPotential load_potential(const std::filesystem::path& path) { return parse_potential(read_file(path)); }

std::string potential_to_json(const FourierPotential& pot) {
  json j;
  j["dim"] = pot.dim();
  j["coeffs"] = json::array();
  for (const auto& [q, c] : pot.coefficients()) j["coeffs"].push_back({{"q", q}, {"re", c.real()}, {"im", c.imag()}});
  return j.dump(2) + "\n";
}

PhaseSpaceFunction parse_symbol(const std::string& text) {
  const json j = parse_json(text, "symbol");
  if (!j.is_object() || !j.contains("terms") || !j.at("terms").is_array())
    throw ValidationError("symbol: missing \"terms\" array");
  int dim = 0;
  if (j.contains("dim")) {
    dim = read_dim(j, "symbol");
  } else if (!j.at("terms").empty() && j.at("terms")[0].contains("q") && j.at("terms")[0].at("q").is_array()) {
    dim = static_cast<int>(j.at("terms")[0].at("q").size());
  }
  if (dim < 1) throw ValidationError("symbol: cannot infer the dimension");
  std::vector<SymbolTerm> terms;
  for (const auto& t : j.at("terms")) {
    if (!t.is_object() || !t.contains("q")) throw ValidationError("symbol: each term needs \"q\"");
    SymbolTerm term;
    term.q = read_frequency(t.at("q"), dim, "symbol");
    if (sup_norm(term.q) > kMaxFileFrequency)
      throw ValidationError("symbol: |q|_inf exceeds " + std::to_string(kMaxFileFrequency));
    term.eta_powers.assign(static_cast<std::size_t>(dim), 0);
    if (t.contains("eta_powers")) {
      const Frequency pw = read_frequency(t.at("eta_powers"), dim, "symbol");
      for (int v : pw)
        if (v < 0) throw ValidationError("symbol: eta powers must be non-negative");
      term.eta_powers = pw;
    }
    term.coefficient = Complex(read_real(t, "re", "symbol"), read_real(t, "im", "symbol"));
    terms.push_back(std::move(term));
  }
  return polynomial_symbol(dim, std::move(terms));
}

PhaseSpaceFunction load_symbol(const std::filesystem::path& path) { return parse_symbol(read_file(path)); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string format_real(Real v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

std::uint64_t fnv1a(const std::string& data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string spectrum_csv(const SpectrumResult& s) {
  std::string out = "hbar,index,eigenvalue,trusted\n";
  const std::string h = format_real(s.hbar) + ",";
  for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i)
    out += h + std::to_string(i) + "," + format_real(s.eigenvalues[i]) + "," +
           (s.eigenvalues[i] < s.trusted_energy ? "1" : "0") + "\n";
  return out;
}

std::string weyl_count_csv(const WeylCountReport& r) {
  std::string out = "hbar,K,count,scaled_count,volume,untrusted\n";
  for (std::size_t i = 0; i < r.hbar.size(); ++i)
    out += format_real(r.hbar[i]) + "," + std::to_string(r.cutoffs[i]) + "," + std::to_string(r.counts[i]) + "," +
           format_real(r.scaled_counts[i]) + "," + format_real(r.volume) + "," + (r.untrusted[i] ? "1" : "0") + "\n";
  return out;
}

std::string wigner_csv(const WignerTable& w) {
  std::string out = axis_header("x_index", w.dim) + "," + axis_header("kappa", w.dim) + ",value\n";
  const auto rows = w.values.rows();
  for (Eigen::Index r = 0; r < rows; ++r) {
    // Row r is the grid point with first axis slowest.
    Frequency xi(static_cast<std::size_t>(w.dim));
    long rem = static_cast<long>(r);
    for (int a = w.dim - 1; a >= 0; --a) {
      xi[static_cast<std::size_t>(a)] = static_cast<int>(rem % w.resolution);
      rem /= w.resolution;
    }
    const std::string prefix = csv_ints(xi) + ",";
    for (std::size_t c = 0; c < w.kappas.size(); ++c)
      out += prefix + csv_ints(w.kappas[c]) + "," + format_real(w.values(r, static_cast<Eigen::Index>(c))) + "\n";
  }
  return out;
}

std::string trajectory_csv(const std::vector<TrajectorySample>& samples) {
  const int dim = samples.empty() ? 1 : static_cast<int>(samples.front().x.size());
  std::string out = "t," + axis_header("x", dim) + "," + axis_header("p", dim) + ",energy\n";
  for (const auto& s : samples)
    out += format_real(s.t) + "," + csv_reals(s.x) + "," + csv_reals(s.p) + "," + format_real(s.energy) + "\n";
  return out;
}

std::string effective_csv(const EffectiveTable& t) {
  std::string out = axis_header("P", t.spec.dim) + ",Hbar,method,residual\n";
  const std::string method = effective_method_name(t.method);
  for (std::size_t i = 0; i < t.P.size(); ++i)
    out += csv_reals(t.P[i]) + "," + format_real(t.values[i]) + "," + method + "," + format_real(t.residuals[i]) + "\n";
  return out;
}

std::string certificates_json(const EffectiveTable& t) {
  const auto& c = t.certificates;
  json j;
  j["method"] = effective_method_name(t.method);
  j["valid"] = t.valid;
  if (!t.valid) j["failure"] = t.failure;
  j["convex"] = c.convex;
  j["convexity_defect"] = jnum(c.convexity_defect);
  j["even_defect"] = jnum(c.even_defect);
  j["bounds_ok"] = c.bounds_ok;
  j["bound_defect"] = jnum(c.bound_defect);
  j["tolerance"] = kCertificateTol;
  return j.dump(2) + "\n";
}

std::string corrector_csv(const Corrector& c) {
  const int dim = static_cast<int>(c.P.size());
  std::string out = axis_header("x_index", dim) + ",u\n";
  for (Eigen::Index r = 0; r < c.u.size(); ++r) {
    Frequency xi(static_cast<std::size_t>(dim));
    long rem = static_cast<long>(r);
    for (int a = dim - 1; a >= 0; --a) {
      xi[static_cast<std::size_t>(a)] = static_cast<int>(rem % c.grid);
      rem /= c.grid;
    }
    out += csv_ints(xi) + "," + format_real(c.u[r]) + "\n";
  }
  return out;
}

std::string egorov_json(const EgorovReport& r) {
  json j;
  j["t"] = r.t;
  j["hbar"] = jvec(r.hbar);
  j["K"] = r.cutoffs;
  j["residual"] = jvec(r.residual);
  j["exact"] = r.exact;
  j["slope"] = jnum(r.slope);
  j["constant"] = jnum(r.constant);
  return j.dump(2) + "\n";
}

std::string theorem2_json(const Theorem2Report& r) {
  json j;
  j["hbar"] = jvec(r.hbar);
  j["K"] = r.cutoffs;
  j["window_upper"] = jvec(r.window_upper);
  j["compared"] = r.compared;
  j["spec_dist"] = jvec(r.spec_dist);
  j["spec_rel_dist"] = jvec(r.spec_rel_dist);
  j["spec_tol"] = kSpecTol;
  j["eff_dist"] = jnum(r.eff_dist);
  j["eff_tol"] = r.eff_tol;
  j["eff_method"] = r.eff_method;
  j["verdict"] = r.pass ? "pass" : "fail";
  j["sampling_note"] = r.sampling_note;
  return j.dump(2) + "\n";
}

std::string bs_csv(const BSReconstruction& r) {
  std::string out = "ell,P,E,Hbar_closed_form,misfit\n";
  for (const auto& p : r.points)
    out += std::to_string(p.ell) + "," + format_real(p.P) + "," + format_real(p.E) + "," +
           format_real(p.hbar_closed_form) + "," + format_real(p.misfit) + "\n";
  return out;
}

std::string manifest_json(const Manifest& m) {
  std::string material = m.subcommand + "\n";
  for (const auto& [k, v] : m.inputs) material += k + "=" + v + "\n";
  std::uint64_t h = fnv1a(material);
  for (const auto& f : m.input_files) h = fnv1a(f, h);
  json j;
  j["subcommand"] = m.subcommand;
  j["inputs"] = m.inputs;
  j["inputs_hash"] = hex64(h);
  j["versions"] = {{"isohom", ISOHOM_VERSION},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                 std::to_string(EIGEN_MINOR_VERSION)},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", compiler_id()}};
  j["outputs"] = m.outputs;
  j["wall_seconds"] = m.wall_seconds;
  j["exit_code"] = m.exit_code;
  return j.dump(2) + "\n";
}

std::string error_json(int exit_code, const std::string& type, const std::string& message) {
  json j;
  j["exit_code"] = exit_code;
  j["error_type"] = type;
  j["message"] = message;
  return j.dump(2) + "\n";
}

}  // namespace isohom::io
