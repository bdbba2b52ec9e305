#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "lgspdc/error.hpp"
#include "run_config.hpp"

using namespace lgspdc;
using namespace lgspdc::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "lgspdc");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("lgspdc_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

json without_meta(json j) {
  j.erase("meta");
  return j;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

const std::vector<std::string> kDecompositionSet{"--set", "crystal.length_mm=20", "--set", "pump.wavelength_nm=404.8",
                                                 "--set", "pump.waist_um=60",      "--set", "signal.waist_um=30"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST_CASE("length parsing converts units at the boundary") {
  CHECK(parse_length("142", "um") == doctest::Approx(142e-6));
  CHECK(parse_length("142um", "nm") == doctest::Approx(142e-6));
  CHECK(parse_length("142 \xC2\xB5m", "nm") == doctest::Approx(142e-6));
  CHECK(parse_length("0.03nm", "um") == doctest::Approx(0.03e-9));
  CHECK(parse_length("10 mm", "um") == doctest::Approx(0.01));
  CHECK(parse_length("2m", "nm") == doctest::Approx(2.0));
  CHECK(parse_length("809.66", "nm") == doctest::Approx(809.66e-9));
  CHECK_THROWS_AS(parse_length("12 furlongs", "nm"), Error);
  CHECK_THROWS_AS(parse_length("", "nm"), Error);
}

TEST_CASE("run configuration defaults, overrides and diagnostics") {
  RunConfig config;
  const SpdcConfig spdc = config.spdc();
  CHECK(spdc.crystal.length == doctest::Approx(0.01));
  CHECK(spdc.pump.waist == doctest::Approx(142e-6));
  CHECK(spdc.signal.center_wavelength == doctest::Approx(810e-9));
  CHECK(spdc.idler.waist == spdc.signal.waist);
  CHECK(spdc.crystal.poling_period.has_value());
  CHECK(config.grid(spdc).size() == 2001);

  config.parse_text("# comment\npump.waist_um = 75um\nidler.waist_um = 31 # trailing\n");
  CHECK(config.spdc().pump.waist == doctest::Approx(75e-6));
  CHECK(config.spdc().idler.waist == doctest::Approx(31e-6));

  auto message = [&](const std::string& text) -> std::string {
    try {
      RunConfig c;
      c.parse_text(text, "run.cfg");
    } catch (const Error& e) {
      return e.what();
    }
    return "";
  };
  const std::string unknown = message("pump.waist_um = 10\npump.colour = blue\n");
  CHECK(unknown.find("pump.colour") != std::string::npos);
  CHECK(unknown.find("line 2") != std::string::npos);
  CHECK(message("grid.points = 2000\n").find("grid.points") != std::string::npos);
  CHECK(message("pump.waist_um = -3\n").find("pump.waist_um") != std::string::npos);
  CHECK(message("crystal.pump_axis = w\n").find("crystal.pump_axis") != std::string::npos);
  CHECK(message("just text\n").find("line 1") != std::string::npos);
  CHECK_THROWS_AS(config.apply_override("novalue"), Error);
}

TEST_CASE("usage errors exit with code 2") {
  const TempDir dir;
  const Result bad_key = call({"decompose", "--out", dir.path.string(), "--set", "grid.pts=3"});
  CHECK(bad_key.code == kUsage);
  CHECK(bad_key.err.find("grid.pts") != std::string::npos);
  CHECK(call({"spectrum", "--out", dir.path.string()}).code == kUsage);
  CHECK(call({"spectrum", "--out", dir.path.string(), "--ells", ""}).code == kUsage);
  CHECK(call({"frobnicate"}).code == kUsage);
  CHECK(call({}).code == kUsage);
  CHECK(call({"decompose", "--format", "xml"}).code == kUsage);
  CHECK(call({"--help"}).code == kOk);

  std::ofstream(dir / "bad.cfg") << "pump.waist_um = 142\nsignal.waste_um = 40\n";
  const Result file = call({"decompose", "--config", dir / "bad.cfg", "--out", dir.path.string()});
  CHECK(file.code == kUsage);
  CHECK(file.err.find("signal.waste_um") != std::string::npos);
  CHECK(file.err.find("line 2") != std::string::npos);
}

TEST_CASE("decompose emits consistent CSV and JSON with a meta block") {
  const TempDir dir;
  const Result r = call(with({"decompose", "--pmax", "3", "--lmax", "1", "--out", dir.path.string()}, kDecompositionSet));
  REQUIRE(r.code == kOk);
  const auto rows = read_csv(dir.path / "correlation_matrix.csv");
  REQUIRE(rows.size() == 1 + 12 * 12);
  CHECK(rows[0] == std::vector<std::string>{"p_s", "l_s", "p_i", "l_i", "probability"});
  const json j = load_json(dir.path / "correlation_matrix.json");
  const auto& probs = j["probabilities"];
  REQUIRE(probs.size() == 12);
  // Column sums from both emissions agree exactly (17-digit round trip).
  for (std::size_t c = 0; c < 12; ++c) {
    double csv_sum = 0.0, json_sum = 0.0;
    for (std::size_t r2 = 0; r2 < 12; ++r2) {
      csv_sum += std::stod(rows[1 + r2 * 12 + c][4]);
      json_sum += probs[r2][c].get<double>();
    }
    CHECK(csv_sum == json_sum);
  }
  const json meta = j["meta"];
  CHECK(meta["version"] == kVersion);
  CHECK(meta["subspace"]["p_max"] == 3);
  CHECK(meta["config"]["pump.waist_um"] == "60");
  CHECK(meta["partial"] == false);
  CHECK(meta.contains("timestamp"));
  const json sidecar = load_json(dir.path / "correlation_matrix.meta.json");
  CHECK(sidecar["meta"]["kind"] == "correlation_matrix");
}

TEST_CASE("windowed decomposition is a distinct dataset tagged with its window") {
  const TempDir dir;
  const Result r = call(with({"decompose", "--window", "809.66nm,0.03nm", "--out", dir.path.string()}, kDecompositionSet));
  REQUIRE(r.code == kOk);
  CHECK(fs::exists(dir.path / "correlation_matrix_window.csv"));
  const json meta = load_json(dir.path / "correlation_matrix_window.json")["meta"];
  CHECK(meta["window"]["center_nm"].get<double>() == doctest::Approx(809.66));
  CHECK(meta["window"]["width_nm"].get<double>() == doctest::Approx(0.03));
}

TEST_CASE("payloads are deterministic and independent of the thread count") {
  const TempDir a, b;
  REQUIRE(call(with({"decompose", "--out", a.path.string(), "--threads", "1"}, kDecompositionSet)).code == kOk);
  REQUIRE(call(with({"decompose", "--out", b.path.string(), "--threads", "3"}, kDecompositionSet)).code == kOk);
  CHECK(slurp(a.path / "correlation_matrix.csv") == slurp(b.path / "correlation_matrix.csv"));
  CHECK(without_meta(load_json(a.path / "correlation_matrix.json")).dump() ==
        without_meta(load_json(b.path / "correlation_matrix.json")).dump());
}

TEST_CASE("spectrum CSV and JSON agree to full precision") {
  const TempDir dir;
  const Result r = call({"spectrum", "--ells", "1,4", "--waists", "1:25um,4:42", "--lg", "0:1:1", "--out", dir.path.string()});
  REQUIRE(r.code == kOk);
  const auto rows = read_csv(dir.path / "spectrum.csv");
  CHECK(rows[0] == std::vector<std::string>{"wavelength_nm", "mode_label", "re", "im", "abs2"});
  REQUIRE(rows.size() == 1 + 3 * 2001);
  const json j = load_json(dir.path / "spectrum.json");
  REQUIRE(j["spectra"].size() == 3);
  for (std::size_t s = 0; s < 3; ++s)
    for (std::size_t k : {0ul, 1000ul, 1500ul}) {
      const auto& row = rows[1 + s * 2001 + k];
      CHECK(row[1] == j["spectra"][s]["label"].get<std::string>());
      CHECK(std::stod(row[0]) == j["wavelength_nm"][k].get<double>());
      CHECK(std::stod(row[2]) == j["spectra"][s]["re"][k].get<double>());
      CHECK(std::stod(row[3]) == j["spectra"][s]["im"][k].get<double>());
    }
  CHECK(j["meta"]["subspace"]["collection_modes"][0]["signal_waist_um"].get<double>() == doctest::Approx(25.0));

  const TempDir csv_only;
  REQUIRE(call({"spectrum", "--ells", "0", "--format", "csv", "--out", csv_only.path.string()}).code == kOk);
  CHECK(fs::exists(csv_only.path / "spectrum.csv"));
  CHECK_FALSE(fs::exists(csv_only.path / "spectrum.json"));
}

TEST_CASE("density and overlap emit labelled complex matrices") {
  const TempDir dir;
  REQUIRE(call({"density", "--ells", "1,2", "--waists", "1:25,2:29", "--phase-sweep", "--out", dir.path.string()}).code == kOk);
  const json rho = load_json(dir.path / "density_matrix.json");
  CHECK(rho["labels"] == json{"l=1", "l=2"});
  CHECK(rho["re"][0][0].get<double>() + rho["re"][1][1].get<double>() == doctest::Approx(1.0));
  CHECK(rho["purity"].get<double>() > 0.97);
  CHECK(rho["fidelity_max"]["value"].get<double>() >= rho["fidelity"]["value"].get<double>());
  REQUIRE(call({"overlap", "--ells", "1,4", "--waists", "1:25,4:42", "--out", dir.path.string()}).code == kOk);
  const json ov = load_json(dir.path / "overlap_matrix.json");
  CHECK(ov["re"][0][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(read_csv(dir.path / "overlap_matrix.csv").size() == 5);
}

TEST_CASE("tomography reconstruct reproduces the simulate report byte for byte") {
  const TempDir sim, rec;
  const Result s = call({"tomography", "simulate", "--ell", "1", "--ell-tilde", "2", "--waists", "1:25um,2:29um",
                         "--seed", "9", "--phase-sweep", "--out", sim.path.string()});
  REQUIRE(s.code == kOk);
  const Result r = call({"tomography", "reconstruct", "--ell", "1", "--ell-tilde", "2", "--counts",
                         (sim.path / "counts.csv").string(), "--phase-sweep", "--out", rec.path.string()});
  REQUIRE(r.code == kOk);
  const json a = load_json(sim.path / "tomography_report.json"), b = load_json(rec.path / "tomography_report.json");
  CHECK(without_meta(a).dump(2) == without_meta(b).dump(2));
  // Seeded runs draw Poisson counts around 9 settings x 10^4.
  CHECK(std::abs(a["total_counts"].get<double>() - 90000.0) < 5.0 * 300.0);
  CHECK(a["meta"]["seed"] == 9);
  CHECK(a["fidelity_max"]["value"].get<double>() > 0.95);

  std::ofstream(sim / "broken.csv") << "setting_index,signal_state,idler_state,counts\n0,l,l,5\n1,l,l,5\n";
  const Result broken = call({"tomography", "reconstruct", "--counts", sim / "broken.csv", "--out", rec.path.string()});
  CHECK(broken.code == kFailure);
  CHECK(broken.err.find("row 2") != std::string::npos);
  CHECK(call({"tomography", "reconstruct", "--out", rec.path.string()}).code == kUsage);
}

TEST_CASE("oracle subcommand reports the closed-form versus quadrature gap") {
  const TempDir dir;
  const Result r = call({"oracle", "--lg", "0:0:0,0:1:2", "--radial-nodes", "64", "--angular-nodes", "128", "--out",
                         dir.path.string()});
  REQUIRE(r.code == kOk);
  const json j = load_json(dir.path / "oracle.json");
  REQUIRE(j["amplitudes"].size() == 2);
  for (const auto& a : j["amplitudes"]) CHECK(a["relative_difference"].get<double>() < 1e-3);
}

TEST_CASE("missing crossings produce flagged partial output") {
  const TempDir dir;
  const Result r = call({"optimize", "waists", "--ells", "4", "--ref", "0", "--set", "sweep.min_um=30", "--set",
                         "sweep.max_um=50", "--out", dir.path.string()});
  CHECK(r.code == kPartial);
  const json report = load_json(dir.path / "waists.json");
  CHECK(report["meta"]["partial"] == true);
  CHECK(report["matched"][1]["waist_um"].is_null());
  CHECK(load_json(dir.path / "waist_sweeps.meta.json")["meta"]["partial"] == true);
}

TEST_CASE("mode optimization reports coefficients, trajectory and spectra") {
  const TempDir dir;
  const Result r = call({"optimize", "modes", "--pmax", "1", "--ells", "0,1", "--set", "pump.waist_um=50", "--set",
                         "signal.waist_um=50", "--max-iter", "2000", "--out", dir.path.string()});
  REQUIRE(r.code == kOk);
  const json report = load_json(dir.path / "optimization_report.json");
  CHECK(report["reference"]["ell"] == 1);
  CHECK(report["reference"]["cost"].get<double>() <= report["reference"]["start_cost"].get<double>());
  CHECK(report["reference"]["idler_coefficients"]["re"].size() == 2);
  CHECK(!report["reference"]["trajectory"].empty());
  CHECK(report["matches"][0]["cost"].get<double>() < 0.02);
  CHECK(read_csv(dir.path / "mode_spectra.csv").size() == 1 + 2 * 2001);

  const TempDir capped;
  const Result c = call({"optimize", "modes", "--pmax", "1", "--ells", "0,1", "--max-iter", "3", "--out",
                         capped.path.string()});
  CHECK(c.code == kPartial);
  CHECK(load_json(capped.path / "optimization_report.json")["meta"]["partial"] == true);
}
