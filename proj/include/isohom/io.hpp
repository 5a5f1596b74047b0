#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "isohom/dynamics.hpp"
#include "isohom/homogenization.hpp"
#include "isohom/inverse_spectral.hpp"
#include "isohom/planewave.hpp"
#include "isohom/semiclassics.hpp"
#include "isohom/torus.hpp"
#include "isohom/weyl.hpp"

namespace isohom::io {

/// Largest |q|_inf accepted from a potential file.
inline constexpr int kMaxFileFrequency = 64;

/// {"dim": n, "coeffs": [{"q": [..], "re": r, "im": s}, ...]}; Hermitian symmetry is
/// validated by the FourierPotential constructor.
FourierPotential parse_potential(const std::string& text);
FourierPotential load_potential(const std::filesystem::path& path);
std::string potential_to_json(const FourierPotential& pot);

/// {"dim": n, "terms": [{"q": [..], "eta_powers": [..], "re": r, "im": s}, ...]}.
/// "dim" may be omitted when the terms fix it.
PhaseSpaceFunction parse_symbol(const std::string& text);
PhaseSpaceFunction load_symbol(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically enough for batch use: temp file then rename.
void write_file(const std::filesystem::path& path, const std::string& content);

/// "%.12e"; "inf", "-inf" and "nan" for non-finite values.
std::string format_real(Real v);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

std::string spectrum_csv(const SpectrumResult& s);
std::string weyl_count_csv(const WeylCountReport& r);
std::string wigner_csv(const WignerTable& w);
std::string trajectory_csv(const std::vector<TrajectorySample>& samples);
std::string effective_csv(const EffectiveTable& t);
std::string certificates_json(const EffectiveTable& t);
std::string corrector_csv(const Corrector& c);
std::string egorov_json(const EgorovReport& r);
std::string theorem2_json(const Theorem2Report& r);
std::string bs_csv(const BSReconstruction& r);

struct Manifest {
  std::string subcommand;
  std::map<std::string, std::string> inputs;  // flag -> value, hashed in key order
  std::vector<std::string> input_files;       // contents folded into the hash
  std::vector<std::string> outputs;
  double wall_seconds = 0.0;
  int exit_code = 0;
};

/// inputs_hash, versions (library, Eigen, JSON, compiler), wall time and outputs.
std::string manifest_json(const Manifest& m);

/// {"exit_code": c, "error_type": "...", "message": "..."}.
std::string error_json(int exit_code, const std::string& type, const std::string& message);

}  // namespace isohom::io
