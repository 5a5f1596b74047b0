#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <limits>

#include "isohom/errors.hpp"
#include "isohom/io.hpp"
#include "json.hpp"

using namespace isohom;
using nlohmann::json;

TEST_CASE("potential files") {
  const FourierPotential v = io::load_potential(std::filesystem::path(ISOHOM_TEST_DATA) / "cosx.json");
  CHECK(v.dim() == 1);
  CHECK(v.coefficient({1}) == Complex(0.5, 0.0));
  CHECK(v.coefficient({-1}) == Complex(0.5, 0.0));

  const FourierPotential w = io::parse_potential(R"({"dim": 2, "coeffs": [
      {"q": [1, 0], "re": 0.5}, {"q": [-1, 0], "re": 0.5},
      {"q": [0, 2], "im": -0.25}, {"q": [0, -2], "im": 0.25}]})");
  RealVector x(2);
  x << 0.3, 0.8;
  CHECK(eval_potential(w, x) == doctest::Approx(std::cos(0.3) + 0.5 * std::sin(1.6)));

  const FourierPotential back = io::parse_potential(io::potential_to_json(w));
  CHECK(back.coefficients() == w.coefficients());
}

TEST_CASE("potential file rejections") {
  CHECK_THROWS_AS(io::parse_potential("{"), ValidationError);
  CHECK_THROWS_AS(io::parse_potential(R"({"coeffs": []})"), ValidationError);
  CHECK_THROWS_AS(io::parse_potential(R"({"dim": 4, "coeffs": []})"), ValidationError);
  CHECK_THROWS_AS(io::parse_potential(R"({"dim": 1, "coeffs": [{"q": [1.5], "re": 1}]})"), ValidationError);
  CHECK_THROWS_AS(io::parse_potential(R"({"dim": 1, "coeffs": [{"q": [1, 0], "re": 1}]})"), ValidationError);
  CHECK_THROWS_AS(io::parse_potential(R"({"dim": 1, "coeffs": [{"q": [65], "re": 1}, {"q": [-65], "re": 1}]})"),
                  ValidationError);
  CHECK_THROWS_AS(io::parse_potential(R"({"dim": 1, "coeffs": [{"q": [1], "re": 1}]})"), ValidationError);
  CHECK_THROWS_AS(io::parse_potential(R"({"dim": 1, "coeffs": [{"q": [0], "re": 1}, {"q": [0], "re": 2}]})"),
                  ValidationError);
  CHECK_THROWS_AS(io::load_potential("/nonexistent/file.json"), std::exception);
}

TEST_CASE("symbol files") {
  const PhaseSpaceFunction b = io::parse_symbol(R"({"terms": [
      {"q": [0], "eta_powers": [2], "re": 0.5},
      {"q": [1], "eta_powers": [0], "re": 0.5}, {"q": [-1], "eta_powers": [0], "re": 0.5}]})");
  CHECK(b.dim() == 1);
  CHECK(b.is_real());
  RealVector x(1), eta(1);
  x << 0.4;
  eta << 1.5;
  CHECK(b(x, eta).real() == doctest::Approx(0.5 * 2.25 + std::cos(0.4)));
  CHECK_THROWS_AS(io::parse_symbol(R"({"terms": []})"), ValidationError);
  CHECK_THROWS_AS(io::parse_symbol(R"({"terms": [{"q": [0], "eta_powers": [-1], "re": 1}]})"), ValidationError);
}

TEST_CASE("number formatting and hashing") {
  CHECK(io::format_real(1.0) == "1.000000000000e+00");
  CHECK(io::format_real(-0.125) == "-1.250000000000e-01");
  CHECK(io::format_real(std::numeric_limits<Real>::infinity()) == "inf");
  CHECK(io::format_real(-std::numeric_limits<Real>::infinity()) == "-inf");
  CHECK(io::format_real(std::nan("")) == "nan");
  CHECK(io::fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(io::fnv1a("foobar") == 0x85944171f73967e8ULL);
  CHECK(io::hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("CSV layouts") {
  const SpectrumResult s = compute_spectrum(FourierPotential(1), 1.0, 2);
  const std::string csv = io::spectrum_csv(s);
  CHECK(csv.rfind("hbar,index,eigenvalue,trusted\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(csv.find("1.000000000000e+00,0,0.000000000000e+00,") != std::string::npos);

  const EffectiveTable t = effective_grid(mechanical_symbol(cosine_mode({1})), {1, 1.0, 0.5}, EffectiveMethod::ClosedForm);
  const std::string e = io::effective_csv(t);
  CHECK(e.rfind("P,Hbar,method,residual\n", 0) == 0);
  CHECK(e.find("closed-form") != std::string::npos);
  const json cert = json::parse(io::certificates_json(t));
  CHECK(cert.at("convex").get<bool>());
  CHECK(cert.contains("even_defect"));
  CHECK(cert.contains("bound_defect"));

  CellOptions coarse;
  coarse.grid = 32;
  const EffectiveTable t2 = effective_grid(mechanical_symbol(FourierPotential(2)), {2, 0.5, 0.5},
                                           EffectiveMethod::CellProblem, coarse);
  CHECK(io::effective_csv(t2).rfind("P1,P2,Hbar,method,residual\n", 0) == 0);

  const BSReconstruction r = bs_reconstruct(FourierPotential(1), compute_spectrum(FourierPotential(1), 0.5, 8));
  CHECK(io::bs_csv(r).rfind("ell,P,E,Hbar_closed_form,misfit\n", 0) == 0);

  const PlaneWaveBasis basis(1, 1);
  ComplexVector psi = ComplexVector::Zero(3);
  psi[1] = 1.0;
  const std::string w = io::wigner_csv(wigner_transform(psi, basis, 1.0, 8));
  CHECK(w.rfind("x_index,kappa,value\n", 0) == 0);

  const auto traj = trajectory(mechanical_symbol(cosine_mode({1})), PhasePoint({0.0}, RealVector::Constant(1, 1.0)),
                               1.0, 1e-2, 4);
  const std::string tc = io::trajectory_csv(traj);
  CHECK(tc.rfind("t,x,p,energy\n", 0) == 0);
  CHECK(std::count(tc.begin(), tc.end(), '\n') == 6);
}

TEST_CASE("report JSON") {
  Theorem2Options o;
  o.hbars = {1.0, 0.5, 0.25};
  const Theorem2Report r = theorem2_check(user_pair(cosine_mode({1}), cosine_mode({1})), o);
  const json j = json::parse(io::theorem2_json(r));
  CHECK(j.at("verdict") == "pass");
  CHECK(j.at("hbar").size() == 3);
  CHECK(j.at("spec_dist").size() == 3);
  CHECK(j.contains("eff_dist"));
  CHECK(j.contains("sampling_note"));
}

TEST_CASE("manifest and error files") {
  io::Manifest m;
  m.subcommand = "spectrum";
  m.inputs = {{"hbar", "1"}, {"K", "2"}};
  m.outputs = {"spectrum.csv"};
  const json a = json::parse(io::manifest_json(m));
  m.wall_seconds = 5.0;
  const json b = json::parse(io::manifest_json(m));
  CHECK(a.at("inputs_hash") == b.at("inputs_hash"));
  CHECK(a.at("inputs_hash").get<std::string>().size() == 16);
  CHECK(a.at("versions").contains("eigen"));
  CHECK(a.at("versions").at("nlohmann_json") == "3.11.3");
  m.inputs["hbar"] = "0.5";
  CHECK(json::parse(io::manifest_json(m)).at("inputs_hash") != a.at("inputs_hash"));

  const json e = json::parse(io::error_json(2, "ValidationError", "bad \"input\""));
  CHECK(e.at("exit_code") == 2);
  CHECK(e.at("error_type") == "ValidationError");
  CHECK(e.at("message") == "bad \"input\"");
}

TEST_CASE("file writes") {
  const auto dir = std::filesystem::temp_directory_path() / "isohom_io_test";
  std::filesystem::create_directories(dir);
  io::write_file(dir / "a.txt", "hello\n");
  CHECK(io::read_file(dir / "a.txt") == "hello\n");
  io::write_file(dir / "a.txt", "again");
  CHECK(io::read_file(dir / "a.txt") == "again");
  std::filesystem::remove_all(dir);
}
