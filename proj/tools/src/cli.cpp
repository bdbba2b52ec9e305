#include "cli.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "emit.hpp"
#include "lgspdc/biphoton.hpp"
#include "lgspdc/error.hpp"
#include "lgspdc/optimize.hpp"
#include "lgspdc/state.hpp"
#include "lgspdc/tomography.hpp"
#include "lgspdc/units.hpp"
#include "run_config.hpp"

namespace lgspdc::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using cd = std::complex<double>;

/// Bad flags or config: reported with exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- flag parsing ----------------------------------------------------------

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, sep);) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

int parse_int(const std::string& text, const std::string& flag) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(text, &used);
    if (used == text.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + ": '" + text + "' is not an integer");
}

std::vector<int> parse_ells(const std::string& text, const std::string& flag) {
  std::vector<int> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_int(item, flag));
  return out;
}

/// "1:25um,2:29um" -> {1: 25e-6, 2: 29e-6}; bare numbers are micrometres.
std::map<int, double> parse_waists(const std::string& text) {
  std::map<int, double> out;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw UsageError("--waists expects ell:waist entries, got '" + item + "'");
    try {
      const double w = parse_length(item.substr(colon + 1), "um");
      if (!(w > 0.0)) throw UsageError("--waists: waist must be positive in '" + item + "'");
      out[parse_int(item.substr(0, colon), "--waists")] = w;
    } catch (const Error& e) {
      throw UsageError(std::string("--waists: ") + e.what());
    }
  }
  return out;
}

/// "0:1:1" -> (p_s, p_i, l)
std::vector<std::array<int, 3>> parse_lg(const std::string& text) {
  std::vector<std::array<int, 3>> out;
  for (const auto& item : split(text, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 3) throw UsageError("--lg expects p_s:p_i:l entries, got '" + item + "'");
    out.push_back({parse_int(parts[0], "--lg"), parse_int(parts[1], "--lg"), parse_int(parts[2], "--lg")});
  }
  return out;
}

double parse_flag_length(const std::string& text, const char* unit, const std::string& flag) {
  try {
    return parse_length(text, unit);
  } catch (const Error& e) {
    throw UsageError(flag + ": " + e.what());
  }
}

// ---- shared state ----------------------------------------------------------

struct Globals {
  std::vector<std::string> config_files;
  std::vector<std::string> overrides;
  std::string out_dir = ".";
  std::string format = "both";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

struct Context {
  RunConfig config;
  SpdcConfig spdc;
  Format format = Format::both;
  json meta;
};

Context make_context(const Globals& g, const std::string& command) {
  Context ctx;
  try {
    for (const auto& file : g.config_files) ctx.config.load_file(file);
    for (const auto& o : g.overrides) ctx.config.apply_override(o);
    ctx.format = parse_format(g.format);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (g.threads == 0) throw UsageError("--threads must be at least 1");
  ctx.spdc = ctx.config.spdc();
  ctx.meta = {{"tool", "lgspdc"},
              {"version", kVersion},
              {"command", command},
              {"timestamp", utc_timestamp()},
              {"config", ctx.config.echo()},
              {"resolved",
               {{"poling_period_um", units::to_um(*ctx.spdc.crystal.poling_period)},
                {"signal_wavelength_nm", units::to_nm(ctx.spdc.signal.center_wavelength)},
                {"idler_wavelength_nm", units::to_nm(ctx.spdc.idler.center_wavelength)},
                {"center_mismatch_per_m", ctx.spdc.center_mismatch},
                {"dispersion_source", ctx.spdc.crystal.dispersion.source()}}},
              {"threads", g.threads},
              {"seed", g.seed ? json(*g.seed) : json(nullptr)}};
  return ctx;
}

double signal_wavelength_nm(const SpdcConfig& config, double omega) {
  return units::to_nm(units::wavelength_of(config.signal_omega0() + omega));
}

std::string gaussian_label(int ell) { return "l=" + std::to_string(ell); }

/// Gaussian collection modes for `ells`, waists from `--waists` or config.
std::vector<CollectionMode> collection_modes(const SpdcConfig& config, const std::vector<int>& ells,
                                             const std::map<int, double>& waists) {
  std::vector<CollectionMode> modes;
  for (int ell : ells) {
    CollectionMode m;
    m.ell = ell;
    if (const auto it = waists.find(ell); it != waists.end()) {
      m.signal_waist = m.idler_waist = it->second;
    } else {
      m.signal_waist = config.signal.waist;
      m.idler_waist = config.idler.waist;
    }
    m.label = gaussian_label(ell);
    modes.push_back(std::move(m));
  }
  return modes;
}

json modes_json(const std::vector<CollectionMode>& modes) {
  json out = json::array();
  for (const auto& m : modes)
    out.push_back({{"label", m.label},
                   {"ell", m.ell},
                   {"signal_waist_um", units::to_um(m.signal_waist)},
                   {"idler_waist_um", units::to_um(m.idler_waist)}});
  return out;
}

json complex_vector_json(const std::vector<cd>& v) {
  json re = json::array(), im = json::array();
  for (const auto& c : v) {
    re.push_back(c.real());
    im.push_back(c.imag());
  }
  return {{"re", std::move(re)}, {"im", std::move(im)}};
}

struct LabelledSpectrum {
  std::string label;
  ComplexSpectrum spectrum;
};

void emit_spectra(Emitter& emitter, const std::string& stem, const SpdcConfig& config, const DetuningGrid& grid,
                  const std::vector<LabelledSpectrum>& spectra, const json& extra_meta) {
  if (emitter.wants_csv()) {
    std::vector<std::string> rows;
    for (const auto& s : spectra)
      for (std::size_t k = 0; k < grid.size(); ++k) {
        const cd v = s.spectrum.values[k];
        rows.push_back(number(signal_wavelength_nm(config, grid.omega()[k])) + ',' + s.label + ',' +
                       number(v.real()) + ',' + number(v.imag()) + ',' + number(std::norm(v)));
      }
    emitter.write_csv(stem, "spectrum", "wavelength_nm,mode_label,re,im,abs2", rows, extra_meta);
  }
  if (emitter.wants_json()) {
    json wavelengths = json::array();
    for (double omega : grid.omega()) wavelengths.push_back(signal_wavelength_nm(config, omega));
    json list = json::array();
    for (const auto& s : spectra) {
      json entry = complex_vector_json(s.spectrum.values);
      json abs2 = json::array();
      for (const auto& v : s.spectrum.values) abs2.push_back(std::norm(v));
      entry["label"] = s.label;
      entry["ell"] = s.spectrum.ell;
      entry["p_s"] = s.spectrum.p_s;
      entry["p_i"] = s.spectrum.p_i;
      entry["normalized"] = s.spectrum.normalization == Normalization::unit_l2;
      entry["abs2"] = std::move(abs2);
      entry["peak_wavelength_nm"] = signal_wavelength_nm(config, peak_detuning(s.spectrum));
      entry["centroid_wavelength_nm"] = signal_wavelength_nm(config, spectral_centroid(s.spectrum));
      list.push_back(std::move(entry));
    }
    emitter.write_json(stem, "spectrum", {{"wavelength_nm", std::move(wavelengths)}, {"spectra", std::move(list)}},
                 extra_meta);
  }
}

void emit_complex_matrix(Emitter& emitter, const std::string& stem, const std::string& kind,
                         const std::vector<std::string>& labels, const Eigen::MatrixXcd& m, json extras,
                         const json& extra_meta) {
  if (emitter.wants_csv()) {
    std::vector<std::string> rows;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c)
        rows.push_back(labels[static_cast<std::size_t>(r)] + ',' + labels[static_cast<std::size_t>(c)] + ',' +
                       number(m(r, c).real()) + ',' + number(m(r, c).imag()));
    emitter.write_csv(stem, kind, "row,column,re,im", rows, extra_meta);
  }
  if (emitter.wants_json()) {
    json payload = complex_matrix_json(labels, m);
    for (auto& [k, v] : extras.items()) payload[k] = v;
    emitter.write_json(stem, kind, std::move(payload), extra_meta);
  }
}

// ---- subcommands -----------------------------------------------------------

struct DecomposeOptions {
  int p_max = 3;
  int ell_max = 1;
  std::string window;
  int window_points = 101;
};

int cmd_decompose(const Globals& g, const DecomposeOptions& o, std::ostream& out) {
  Context ctx = make_context(g, "decompose");
  const DetuningGrid grid = ctx.config.grid(ctx.spdc);
  std::optional<SpectralWindow> window;
  if (!o.window.empty()) {
    const auto parts = split(o.window, ',');
    if (parts.size() != 2) throw UsageError("--window expects center,width (e.g. 809.66nm,0.03nm)");
    window = SpectralWindow{parse_flag_length(parts[0], "nm", "--window"),
                            parse_flag_length(parts[1], "nm", "--window")};
  }
  const ModeCorrelationMatrix m = joint_correlation_matrix(
      ctx.spdc, o.p_max, o.ell_max, grid, window, {.threads = g.threads, .window_points = o.window_points});

  json meta = {{"subspace", {{"p_max", o.p_max}, {"ell_max", o.ell_max}}},
               {"window", window ? json{{"center_nm", units::to_nm(window->center_wavelength)},
                                        {"width_nm", units::to_nm(window->width)},
                                        {"points", o.window_points}}
                                 : json(nullptr)}};
  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  const std::string stem = window ? "correlation_matrix_window" : "correlation_matrix";
  if (emitter.wants_csv()) {
    std::vector<std::string> rows;
    for (std::size_t r = 0; r < m.signal_modes.size(); ++r)
      for (std::size_t c = 0; c < m.idler_modes.size(); ++c)
        rows.push_back(std::to_string(m.signal_modes[r].p) + ',' + std::to_string(m.signal_modes[r].ell) + ',' +
                       std::to_string(m.idler_modes[c].p) + ',' + std::to_string(m.idler_modes[c].ell) + ',' +
                       number(m.probabilities(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c))));
    emitter.write_csv(stem, "correlation_matrix", "p_s,l_s,p_i,l_i,probability", rows, meta);
  }
  if (emitter.wants_json()) {
    auto mode_list = [](const std::vector<LGIndex>& modes) {
      json j = json::array();
      for (const auto& mo : modes) j.push_back({{"p", mo.p}, {"l", mo.ell}});
      return j;
    };
    json probs = json::array();
    for (Eigen::Index r = 0; r < m.probabilities.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.probabilities.cols(); ++c) row.push_back(m.probabilities(r, c));
      probs.push_back(std::move(row));
    }
    emitter.write_json(stem, "correlation_matrix",
                 {{"signal_modes", mode_list(m.signal_modes)},
                  {"idler_modes", mode_list(m.idler_modes)},
                  {"probabilities", std::move(probs)},
                  {"raw_total", m.raw_total}},
                 meta);
  }
  emitter.finish();
  return kOk;
}

struct SpectrumOptions {
  std::string ells;
  std::string lg;
  std::string waists;
  bool normalize = false;
};

int cmd_spectrum(const Globals& g, const SpectrumOptions& o, std::ostream& out) {
  if (o.ells.empty() && o.lg.empty()) throw UsageError("spectrum needs a nonempty mode list (--ells or --lg)");
  Context ctx = make_context(g, "spectrum");
  const DetuningGrid grid = ctx.config.grid(ctx.spdc);
  const auto ells = parse_ells(o.ells, "--ells");
  const auto lgs = parse_lg(o.lg);
  if (ells.empty() && lgs.empty()) throw UsageError("spectrum needs a nonempty mode list (--ells or --lg)");
  const auto modes = collection_modes(ctx.spdc, ells, parse_waists(o.waists));

  std::vector<LabelledSpectrum> spectra;
  for (const auto& m : modes) {
    ComplexSpectrum s = collection_spectrum(ctx.spdc, m, grid);
    if (o.normalize) s.normalize();
    spectra.push_back({m.label, std::move(s)});
  }
  for (const auto& [ps, pi, ell] : lgs) {
    ComplexSpectrum s = spectrum(ctx.spdc, ps, pi, ell, grid, o.normalize);
    spectra.push_back(
        {"ps=" + std::to_string(ps) + ";pi=" + std::to_string(pi) + ";l=" + std::to_string(ell), std::move(s)});
  }
  json lg_json = json::array();
  for (const auto& [ps, pi, ell] : lgs) lg_json.push_back({{"p_s", ps}, {"p_i", pi}, {"l", ell}});
  const json meta = {{"subspace", {{"collection_modes", modes_json(modes)}, {"lg_modes", lg_json}}},
                     {"normalized", o.normalize}};
  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  emit_spectra(emitter, "spectrum", ctx.spdc, grid, spectra, meta);
  emitter.finish();
  return kOk;
}

WaistRange sweep_range(const RunConfig& config) {
  return {config.length("sweep.min_um"), config.length("sweep.max_um"), config.length("sweep.step_um")};
}

json sweep_json(const std::vector<WaistSweepResult>& sweeps) {
  json list = json::array();
  for (const auto& s : sweeps) {
    json waists = json::array();
    for (double w : s.waists) waists.push_back(units::to_um(w));
    list.push_back({{"ell", s.ell},
                    {"waist_um", std::move(waists)},
                    {"probability", s.probabilities},
                    {"argmax_waist_um", units::to_um(s.waists[s.argmax()])}});
  }
  return list;
}

void emit_sweeps(Emitter& emitter, const std::string& stem, const std::vector<WaistSweepResult>& sweeps,
                 const json& meta) {
  if (emitter.wants_csv()) {
    std::vector<std::string> rows;
    for (const auto& s : sweeps)
      for (std::size_t k = 0; k < s.waists.size(); ++k)
        rows.push_back(std::to_string(s.ell) + ',' + number(units::to_um(s.waists[k])) + ',' +
                       number(s.probabilities[k]));
    emitter.write_csv(stem, "sweep", "ell,waist_um,probability", rows, meta);
  }
  if (emitter.wants_json()) emitter.write_json(stem, "sweep", {{"sweeps", sweep_json(sweeps)}}, meta);
}

json sweep_meta(const RunConfig& config, const SpdcConfig& spdc, const DetuningGrid& grid,
                const std::vector<int>& ells) {
  return {{"subspace", {{"ells", ells}, {"p", 0}}},
          {"sweep_grid",
           {{"points", grid.size()}, {"span_nm", units::to_nm(config.length("sweep.span_nm"))},
            {"z_order", spdc.z_order}}}};
}

int cmd_sweep(const Globals& g, const std::string& ells_text, std::ostream& out) {
  Context ctx = make_context(g, "sweep");
  const auto ells = parse_ells(ells_text, "--ells");
  if (ells.empty()) throw UsageError("sweep needs --ells");
  const SpdcConfig spdc = ctx.config.sweep_spdc();
  const DetuningGrid grid = ctx.config.sweep_grid(spdc);
  std::vector<WaistSweepResult> sweeps;
  for (int ell : ells)
    sweeps.push_back(waist_sweep(spdc, ell, sweep_range(ctx.config), grid,
                                 {.threads = g.threads, .probability = ctx.config.probability_options()}));
  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  emit_sweeps(emitter, "sweep", sweeps, sweep_meta(ctx.config, spdc, grid, ells));
  emitter.finish();
  return kOk;
}

int cmd_overlap(const Globals& g, const std::string& ells_text, const std::string& waists, std::ostream& out) {
  Context ctx = make_context(g, "overlap");
  const auto ells = parse_ells(ells_text, "--ells");
  if (ells.empty()) throw UsageError("overlap needs --ells");
  const DetuningGrid grid = ctx.config.grid(ctx.spdc);
  const auto modes = collection_modes(ctx.spdc, ells, parse_waists(waists));
  std::vector<ComplexSpectrum> spectra;
  std::vector<std::string> labels;
  for (const auto& m : modes) {
    spectra.push_back(collection_spectrum(ctx.spdc, m, grid));
    labels.push_back(m.label);
  }
  const auto n = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXcd overlaps(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c)
      overlaps(r, c) = spectral_overlap(spectra[static_cast<std::size_t>(r)], spectra[static_cast<std::size_t>(c)]);
  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  emit_complex_matrix(emitter, "overlap_matrix", "overlap_matrix", labels, overlaps, json::object(),
                      {{"subspace", {{"collection_modes", modes_json(modes)}}}});
  emitter.finish();
  return kOk;
}

struct DensityOptions {
  std::string ells;
  std::string waists;
  double phase = 0.0;
  bool phase_sweep = false;
};

int cmd_density(const Globals& g, const DensityOptions& o, std::ostream& out) {
  Context ctx = make_context(g, "density");
  const auto ells = parse_ells(o.ells, "--ells");
  if (ells.empty()) throw UsageError("density needs --ells");
  const DetuningGrid grid = ctx.config.grid(ctx.spdc);
  const auto modes = collection_modes(ctx.spdc, ells, parse_waists(o.waists));
  const SpatialDensityMatrix rho = reduced_spatial_density(ctx.spdc, modes, grid, g.threads);

  json extras = {{"purity", purity(rho.rho)}};
  if (modes.size() == 2 && modes[0].ell != modes[1].ell) {
    const int a = modes[0].ell, b = modes[1].ell;
    extras["fidelity"] = {{"phase", o.phase}, {"value", fidelity(rho.rho, target_state(a, b, o.phase).rho)}};
    if (o.phase_sweep) {
      const PhaseScan best = max_fidelity_over_phase(
          rho.rho, [&](double phi) -> Eigen::MatrixXcd { return target_state(a, b, phi).rho; });
      extras["fidelity_max"] = {{"phase", best.phase}, {"value", best.fidelity}};
    }
  }
  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  emit_complex_matrix(emitter, "density_matrix", "density_matrix", rho.labels, rho.rho, extras,
                      {{"subspace", {{"collection_modes", modes_json(modes)}}}});
  out << "purity " << number(purity(rho.rho)) << '\n';
  if (extras.contains("fidelity_max")) out << "fidelity_max " << number(extras["fidelity_max"]["value"]) << '\n';
  emitter.finish();
  return kOk;
}

struct WaistOptions {
  std::string ells = "1,2,3,4";
  int reference = 4;
  std::string branch = "small";
  std::string pump_waist;
};

int cmd_optimize_waists(Globals g, const WaistOptions& o, std::ostream& out) {
  if (!o.pump_waist.empty()) g.overrides.push_back("pump.waist_um=" + o.pump_waist);
  Context ctx = make_context(g, "optimize waists");
  auto ells = parse_ells(o.ells, "--ells");
  if (ells.empty()) throw UsageError("optimize waists needs --ells");
  if (o.branch != "small" && o.branch != "large") throw UsageError("--branch must be small or large");
  const WaistBranch branch = o.branch == "small" ? WaistBranch::small : WaistBranch::large;
  const SpdcConfig spdc = ctx.config.sweep_spdc();
  const DetuningGrid grid = ctx.config.sweep_grid(spdc);
  const WaistRange range = sweep_range(ctx.config);
  const SweepOptions sweep_options{.threads = g.threads, .probability = ctx.config.probability_options()};

  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  std::map<int, double> waists, probabilities;
  std::map<int, std::string> failures;
  std::vector<WaistSweepResult> sweeps;
  double reference_probability = 0.0;
  std::vector<int> all = ells;
  if (std::find(all.begin(), all.end(), o.reference) == all.end()) all.push_back(o.reference);
  std::sort(all.begin(), all.end());
  try {
    const WaistMatch match = match_collection_waists(spdc, all, o.reference, grid, range, branch, sweep_options);
    waists = match.waists;
    probabilities = match.probabilities;
    sweeps = match.sweeps;
    reference_probability = match.reference_probability;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoCrossing) throw;
    // Resolve each order on its own so the crossings that exist are still reported.
    for (int ell : all) {
      const int single[] = {ell};
      try {
        const WaistMatch m = match_collection_waists(spdc, single, o.reference, grid, range, branch, sweep_options);
        waists[ell] = m.waists.at(ell);
        probabilities[ell] = m.probabilities.at(ell);
        reference_probability = m.reference_probability;
        for (const auto& s : m.sweeps)
          if (std::none_of(sweeps.begin(), sweeps.end(), [&](const auto& x) { return x.ell == s.ell; }))
            sweeps.push_back(s);
      } catch (const Error& inner) {
        if (inner.code() != ErrorCode::NoCrossing) throw;
        failures[ell] = inner.what();
        emitter.mark_partial("no crossing for l=" + std::to_string(ell));
        sweeps.push_back(waist_sweep(spdc, ell, range, grid, sweep_options));
      }
    }
    std::sort(sweeps.begin(), sweeps.end(), [](const auto& a, const auto& b) { return a.ell < b.ell; });
  }

  json matched = json::array();
  for (int ell : all) {
    json entry = {{"ell", ell}, {"reference", ell == o.reference}};
    if (const auto it = waists.find(ell); it != waists.end()) {
      entry["waist_um"] = units::to_um(it->second);
      entry["probability"] = probabilities.at(ell);
    } else {
      entry["waist_um"] = nullptr;
      entry["error"] = failures.count(ell) ? failures.at(ell) : "not solved";
    }
    matched.push_back(std::move(entry));
  }
  const json meta = sweep_meta(ctx.config, spdc, grid, all);
  emitter.write_json("waists", "optimization_report",
               {{"objective", "equal collection probability"},
                {"reference_ell", o.reference},
                {"reference_probability", reference_probability},
                {"branch", o.branch},
                {"pump_waist_um", units::to_um(spdc.pump.waist)},
                {"matched", std::move(matched)}},
               meta);
  emit_sweeps(emitter, "waist_sweeps", sweeps, meta);
  for (const auto& [ell, w] : waists) out << "l=" << ell << " waist_um " << number(units::to_um(w)) << '\n';
  emitter.finish();
  return emitter.partial() ? kPartial : kOk;
}

struct ModesOptions {
  int p_max = 10;
  std::string ells = "0,1,2";
  std::optional<int> reference;
  int max_iterations = 5000;
  int restarts = 2;
  double tolerance = 1e-8;
};

json optimization_json(int ell, const std::string& objective, const ModeOptimization& r) {
  return {{"ell", ell},
          {"objective", objective},
          {"start_cost", r.start_cost},
          {"cost", r.cost},
          {"iterations", r.iterations},
          {"evaluations", r.evaluations},
          {"converged", r.converged},
          {"idler_coefficients", complex_vector_json(r.modes.idler)},
          {"signal_coefficients", complex_vector_json(r.modes.signal)},
          {"profile_asymmetry", profile_asymmetry(r.modes)},
          {"trajectory", r.trajectory}};
}

int cmd_optimize_modes(const Globals& g, const ModesOptions& o, std::ostream& out) {
  Context ctx = make_context(g, "optimize modes");
  const auto ells = parse_ells(o.ells, "--ells");
  if (ells.empty()) throw UsageError("optimize modes needs --ells");
  if (o.p_max < 0) throw UsageError("--pmax must be nonnegative");
  const int reference = o.reference.value_or(*std::max_element(ells.begin(), ells.end()));
  const DetuningGrid grid = ctx.config.grid(ctx.spdc);
  SimplexOptions simplex;
  simplex.max_iterations = o.max_iterations;
  simplex.restarts = o.restarts;
  simplex.tolerance = o.tolerance;
  simplex.record_trajectory = true;

  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  const ModeBasis ref_basis(ctx.spdc, reference, o.p_max, grid);
  const ModeOptimization bright = minimize([&](const SuperpositionModes& m) { return cost_brightness(m, ref_basis); },
                                           SuperpositionModes::uniform(o.p_max), simplex);
  if (!bright.converged) emitter.mark_partial("brightness optimization hit the iteration cap");
  out << "l=" << reference << " F_bright " << number(bright.start_cost) << " -> " << number(bright.cost) << '\n';

  std::vector<LabelledSpectrum> spectra{{"l=" + std::to_string(reference), ref_basis.spectrum(bright.modes)}};
  json matches = json::array();
  for (int ell : ells) {
    if (ell == reference) continue;
    const ModeBasis basis(ctx.spdc, ell, o.p_max, grid);
    const ModeOptimization match = minimize(
        [&](const SuperpositionModes& m) { return cost_spectral_match(bright.modes, ref_basis, m, basis); },
        SuperpositionModes::uniform(o.p_max), simplex);
    if (!match.converged) emitter.mark_partial("spectral match for l=" + std::to_string(ell) + " hit the iteration cap");
    out << "l=" << ell << " F_spect " << number(match.cost) << '\n';
    matches.push_back(optimization_json(ell, "spectral_match", match));
    spectra.push_back({"l=" + std::to_string(ell), basis.spectrum(match.modes)});
  }
  for (auto& s : spectra) s.spectrum.normalize();

  const json meta = {{"subspace", {{"p_max", o.p_max}, {"ells", ells}, {"reference_ell", reference}}},
                     {"simplex",
                      {{"max_iterations", o.max_iterations}, {"restarts", o.restarts}, {"tolerance", o.tolerance}}}};
  emitter.write_json("optimization_report", "optimization_report",
               {{"reference", optimization_json(reference, "brightness", bright)}, {"matches", std::move(matches)}},
               meta);
  emit_spectra(emitter, "mode_spectra", ctx.spdc, grid, spectra, meta);
  emitter.finish();
  return emitter.partial() ? kPartial : kOk;
}

struct TomographyOptions {
  int ell = 1;
  int ell_tilde = 2;
  std::string state = "model";
  std::string waists;
  double phase = 0.0;
  bool phase_sweep = false;
  std::int64_t counts_per_setting = 10000;
  std::string counts_file;
};

constexpr int kSettingsPerBasisPair = 9;

/// Report payload shared by simulate and reconstruct; a pure function of the
/// counts and the analysis options.
json tomography_report(const TomographyRun& run, const TomographyOptions& o) {
  const MleResult mle = mle_reconstruct(run);
  json counts = json::array();
  std::int64_t total = 0;
  for (std::size_t j = 0; j < run.counts.size(); ++j) {
    const auto& p = run.projectors.projectors[j];
    counts.push_back({{"setting_index", p.setting_index},
                      {"signal_state", to_string(p.signal)},
                      {"idler_state", to_string(p.idler)},
                      {"counts", run.counts[j]}});
    total += run.counts[j];
  }
  json report = {{"subspace", {{"ell", o.ell}, {"ell_tilde", o.ell_tilde}, {"basis", {"l,-l", "l,-lt", "lt,-l", "lt,-lt"}}}},
                 {"total_counts", total},
                 {"counts", std::move(counts)},
                 {"rho", complex_matrix_json({"l,-l", "l,-lt", "lt,-l", "lt,-lt"}, mle.rho)},
                 {"purity", purity(mle.rho)},
                 {"fidelity", {{"phase", o.phase}, {"value", fidelity(mle.rho, embedded_target(o.phase))}}},
                 {"log_likelihood", mle.log_likelihood},
                 {"converged", mle.converged},
                 {"restarted", mle.restarted},
                 {"iterations", mle.iterations}};
  if (o.phase_sweep) {
    const PhaseScan best =
        max_fidelity_over_phase(mle.rho, [](double phi) -> Eigen::MatrixXcd { return embedded_target(phi); });
    report["fidelity_max"] = {{"phase", best.phase}, {"value", best.fidelity}};
  }
  return report;
}

int emit_tomography(Emitter& emitter, const TomographyRun& run, const TomographyOptions& o, std::ostream& out,
                    const json& meta) {
  const json report = tomography_report(run, o);
  if (!report["converged"].get<bool>()) emitter.mark_partial("likelihood maximization hit the iteration cap");
  emitter.write_json("tomography_report", "tomography_report", report, meta);
  out << "purity " << number(report["purity"]) << '\n';
  out << "fidelity " << number(report["fidelity"]["value"]) << '\n';
  if (report.contains("fidelity_max")) out << "fidelity_max " << number(report["fidelity_max"]["value"]) << '\n';
  emitter.finish();
  return emitter.partial() ? kPartial : kOk;
}

int cmd_tomography_simulate(const Globals& g, const TomographyOptions& o, std::ostream& out) {
  Context ctx = make_context(g, "tomography simulate");
  if (o.counts_per_setting <= 0) throw UsageError("--counts-per-setting must be positive");
  if (o.ell == o.ell_tilde) throw UsageError("--ell and --ell-tilde must differ");
  Eigen::Matrix4cd rho;
  json source;
  if (o.state == "target") {
    rho = embedded_target(o.phase);
    source = {{"state", "target"}, {"phase", o.phase}};
  } else if (o.state == "model") {
    const DetuningGrid grid = ctx.config.grid(ctx.spdc);
    const auto modes = collection_modes(ctx.spdc, {o.ell, o.ell_tilde}, parse_waists(o.waists));
    rho = embed(reduced_spatial_density(ctx.spdc, modes, grid, g.threads).rho);
    source = {{"state", "model"}, {"collection_modes", modes_json(modes)}};
  } else {
    throw UsageError("--state must be target or model");
  }
  const std::int64_t total = o.counts_per_setting * kSettingsPerBasisPair;
  const TomographyRun run = simulate_counts(rho, projector_set(o.ell, o.ell_tilde), total, g.seed);
  const json meta = {{"subspace", {{"ell", o.ell}, {"ell_tilde", o.ell_tilde}}},
                     {"source", source},
                     {"counts_per_setting", o.counts_per_setting},
                     {"noise", g.seed ? "poisson" : "none (expected counts rounded)"}};
  Emitter emitter(g.out_dir, Format::json, ctx.meta, out);
  std::ostringstream csv;
  write_counts_csv(csv, run);
  emitter.write_text("counts.csv", "tomography_counts", csv.str(), meta);
  return emit_tomography(emitter, run, o, out, meta);
}

int cmd_tomography_reconstruct(const Globals& g, const TomographyOptions& o, std::ostream& out) {
  Context ctx = make_context(g, "tomography reconstruct");
  if (o.counts_file.empty()) throw UsageError("tomography reconstruct needs --counts <file>");
  std::ifstream in(o.counts_file);
  if (!in) throw UsageError("cannot open counts file '" + o.counts_file + "'");
  const TomographyRun run = read_counts_csv(in, o.ell, o.ell_tilde);
  Emitter emitter(g.out_dir, Format::json, ctx.meta, out);
  return emit_tomography(emitter, run, o, out,
                         {{"subspace", {{"ell", o.ell}, {"ell_tilde", o.ell_tilde}}}, {"counts_file", o.counts_file}});
}

struct OracleOptions {
  std::string lg = "0:0:0";
  std::string wavelengths;
  int radial_nodes = 128;
  int angular_nodes = 256;
};

int cmd_oracle(const Globals& g, const OracleOptions& o, std::ostream& out) {
  Context ctx = make_context(g, "oracle");
  const auto lgs = parse_lg(o.lg);
  if (lgs.empty()) throw UsageError("oracle needs --lg");
  std::vector<double> omegas;
  if (o.wavelengths.empty()) {
    omegas.push_back(0.0);
  } else {
    for (const auto& w : split(o.wavelengths, ','))
      omegas.push_back(units::angular_frequency(parse_flag_length(w, "nm", "--wavelengths")) -
                       ctx.spdc.signal_omega0());
  }
  const QuadratureSpec spec{.radial_nodes = o.radial_nodes, .angular_nodes = o.angular_nodes};
  std::vector<std::string> rows;
  json list = json::array();
  for (const auto& [ps, pi, ell] : lgs)
    for (double omega : omegas) {
      const cd closed = mode_amplitude(ctx.spdc, ps, pi, ell, omega);
      const cd oracle = oracle_amplitude(ctx.spdc, ps, pi, ell, omega, spec);
      const double scale = std::max(std::abs(closed), std::abs(oracle));
      const double rel = scale > 0.0 ? std::abs(closed - oracle) / scale : 0.0;
      const double lambda = signal_wavelength_nm(ctx.spdc, omega);
      rows.push_back(std::to_string(ps) + ',' + std::to_string(pi) + ',' + std::to_string(ell) + ',' +
                     number(lambda) + ',' + number(closed.real()) + ',' + number(closed.imag()) + ',' +
                     number(oracle.real()) + ',' + number(oracle.imag()) + ',' + number(rel));
      list.push_back({{"p_s", ps},
                      {"p_i", pi},
                      {"l", ell},
                      {"wavelength_nm", lambda},
                      {"closed_form", {{"re", closed.real()}, {"im", closed.imag()}}},
                      {"oracle", {{"re", oracle.real()}, {"im", oracle.imag()}}},
                      {"relative_difference", rel}});
      out << "ps=" << ps << " pi=" << pi << " l=" << ell << " lambda_nm=" << number(lambda) << " rel " << number(rel)
          << '\n';
    }
  const json meta = {{"quadrature", {{"radial_nodes", o.radial_nodes}, {"angular_nodes", o.angular_nodes}}}};
  Emitter emitter(g.out_dir, ctx.format, ctx.meta, out);
  if (emitter.wants_csv())
    emitter.write_csv("oracle", "oracle_check",
                "p_s,p_i,l,wavelength_nm,closed_re,closed_im,oracle_re,oracle_im,relative_difference", rows, meta);
  if (emitter.wants_json()) emitter.write_json("oracle", "oracle_check", {{"amplitudes", std::move(list)}}, meta);
  emitter.finish();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spatio-spectral modelling of broadband OAM photon pairs", "lgspdc"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_files, "Run configuration file (key = value lines)");
  app.add_option("--set", g.overrides, "Override one config key: key=value")->allow_extra_args(false);
  app.add_option("--out", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--format", g.format, "csv, json or both")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for Poisson counts (absent: noiseless)");
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")->capture_default_str();

  std::function<int()> action;

  DecomposeOptions dec;
  auto* decompose = app.add_subcommand("decompose", "Joint LG mode-correlation matrix");
  decompose->add_option("--pmax", dec.p_max, "Largest radial order")->capture_default_str();
  decompose->add_option("--lmax", dec.ell_max, "Largest |l|")->capture_default_str();
  decompose->add_option("--window", dec.window, "Spectral filter center,width (e.g. 809.66nm,0.03nm)");
  decompose->add_option("--window-points", dec.window_points, "Samples across the window")->capture_default_str();
  decompose->callback([&] { action = [&] { return cmd_decompose(g, dec, out); }; });

  SpectrumOptions spec;
  auto* spectrum_cmd = app.add_subcommand("spectrum", "Complex spectra of collection modes");
  spectrum_cmd->add_option("--ells", spec.ells, "Gaussian (p=0) collection orders, e.g. 1,2,3,4");
  spectrum_cmd->add_option("--lg", spec.lg, "Explicit LG pairs p_s:p_i:l, comma separated");
  spectrum_cmd->add_option("--waists", spec.waists, "Per-order collection waists, e.g. 1:25um,2:29um");
  spectrum_cmd->add_flag("--normalize", spec.normalize, "Unit L2 norm per spectrum");
  spectrum_cmd->callback([&] { action = [&] { return cmd_spectrum(g, spec, out); }; });

  std::string sweep_ells;
  auto* sweep = app.add_subcommand("sweep", "Collection probability versus collection waist");
  sweep->add_option("--ells", sweep_ells, "OAM orders")->required();
  sweep->callback([&] { action = [&] { return cmd_sweep(g, sweep_ells, out); }; });

  std::string overlap_ells, overlap_waists;
  auto* overlap = app.add_subcommand("overlap", "Normalized spectral overlaps between collection modes");
  overlap->add_option("--ells", overlap_ells, "OAM orders")->required();
  overlap->add_option("--waists", overlap_waists, "Per-order collection waists");
  overlap->callback([&] { action = [&] { return cmd_overlap(g, overlap_ells, overlap_waists, out); }; });

  DensityOptions dens;
  auto* density = app.add_subcommand("density", "Reduced spatial density matrix after spectral trace");
  density->add_option("--ells", dens.ells, "OAM orders spanning the subspace")->required();
  density->add_option("--waists", dens.waists, "Per-order collection waists");
  density->add_option("--phase", dens.phase, "Target relative phase (rad)")->capture_default_str();
  density->add_flag("--phase-sweep", dens.phase_sweep, "Also report fidelity maximized over the phase");
  density->callback([&] { action = [&] { return cmd_density(g, dens, out); }; });

  auto* optimize = app.add_subcommand("optimize", "Waist matching and mode-superposition optimization");
  optimize->require_subcommand(1);
  WaistOptions wopt;
  auto* waists = optimize->add_subcommand("waists", "Equalize collection probabilities across orders");
  waists->add_option("--ells", wopt.ells, "Orders to match")->capture_default_str();
  waists->add_option("--ref", wopt.reference, "Reference order (takes its optimal waist)")->capture_default_str();
  waists->add_option("--branch", wopt.branch, "small or large waist branch")->capture_default_str();
  waists->add_option("--wp", wopt.pump_waist, "Pump waist (shorthand for --set pump.waist_um=...)");
  waists->callback([&] { action = [&] { return cmd_optimize_waists(g, wopt, out); }; });
  ModesOptions mopt;
  auto* modes = optimize->add_subcommand("modes", "Brightness and spectral-match superposition optimization");
  modes->add_option("--pmax", mopt.p_max, "Largest radial order in the superposition")->capture_default_str();
  modes->add_option("--ells", mopt.ells, "Orders; the reference is brightness-optimized")->capture_default_str();
  modes->add_option("--ref", mopt.reference, "Reference order (default: largest listed)");
  modes->add_option("--max-iter", mopt.max_iterations, "Simplex iteration cap")->capture_default_str();
  modes->add_option("--restarts", mopt.restarts, "Polishing restarts after convergence")->capture_default_str();
  modes->add_option("--tolerance", mopt.tolerance, "Simplex cost-spread tolerance")->capture_default_str();
  modes->callback([&] { action = [&] { return cmd_optimize_modes(g, mopt, out); }; });

  auto* tomography = app.add_subcommand("tomography", "Simulated state tomography in a two-order subspace");
  tomography->require_subcommand(1);
  TomographyOptions topt;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--ell", topt.ell, "First order (basis index 0)")->capture_default_str();
    cmd->add_option("--ell-tilde", topt.ell_tilde, "Second order (basis index 3)")->capture_default_str();
    cmd->add_option("--phase", topt.phase, "Target relative phase (rad)")->capture_default_str();
    cmd->add_flag("--phase-sweep", topt.phase_sweep, "Also report fidelity maximized over the phase");
  };
  auto* simulate = tomography->add_subcommand("simulate", "Simulate counts and reconstruct");
  add_common(simulate);
  simulate->add_option("--state", topt.state, "target or model")->capture_default_str();
  simulate->add_option("--waists", topt.waists, "Per-order collection waists for the model state");
  simulate->add_option("--counts-per-setting", topt.counts_per_setting, "Counts per basis pair")
      ->capture_default_str();
  simulate->callback([&] { action = [&] { return cmd_tomography_simulate(g, topt, out); }; });
  auto* reconstruct = tomography->add_subcommand("reconstruct", "Reconstruct from a counts file");
  add_common(reconstruct);
  reconstruct->add_option("--counts", topt.counts_file, "Counts CSV")->required();
  reconstruct->callback([&] { action = [&] { return cmd_tomography_reconstruct(g, topt, out); }; });

  OracleOptions oopt;
  auto* oracle = app.add_subcommand("oracle", "Closed-form amplitude versus brute-force overlap");
  oracle->add_option("--lg", oopt.lg, "LG pairs p_s:p_i:l")->capture_default_str();
  oracle->add_option("--wavelengths", oopt.wavelengths, "Signal wavelengths (default: centre)");
  oracle->add_option("--radial-nodes", oopt.radial_nodes)->capture_default_str();
  oracle->add_option("--angular-nodes", oopt.angular_nodes)->capture_default_str();
  oracle->callback([&] { action = [&] { return cmd_oracle(g, oopt, out); }; });

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  try {
    return action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace lgspdc::cli
