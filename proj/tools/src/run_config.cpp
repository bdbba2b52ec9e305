#include "run_config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "lgspdc/error.hpp"
#include "lgspdc/units.hpp"

namespace lgspdc::cli {

namespace {

enum class Kind { length, number, integer, odd_integer, text, axis, pm_type };

struct KeySpec {
  const char* key;
  const char* default_value;
  Kind kind;
  bool allow_auto = false;  // "auto" (or "none" for optional values) accepted
};

constexpr KeySpec kKeys[] = {
    {"crystal.length_mm", "10", Kind::length},
    {"crystal.poling_period_um", "auto", Kind::length, true},
    {"crystal.pm_type", "type-II", Kind::pm_type},
    {"crystal.pump_axis", "y", Kind::axis},
    {"crystal.signal_axis", "y", Kind::axis},
    {"crystal.idler_axis", "z", Kind::axis},
    {"crystal.residual_mismatch_per_m", "0", Kind::number},
    {"crystal.temperature_c", "auto", Kind::number, true},
    {"pump.wavelength_nm", "405", Kind::length},
    {"pump.waist_um", "142", Kind::length},
    {"signal.wavelength_nm", "auto", Kind::length, true},
    {"signal.waist_um", "42", Kind::length},
    {"idler.waist_um", "auto", Kind::length, true},
    {"grid.points", "2001", Kind::odd_integer},
    {"grid.span_nm", "6", Kind::length},
    {"quadrature.z_order", "64", Kind::integer},
    {"dispersion.file", "builtin-ktp", Kind::text},
    {"sweep.min_um", "10", Kind::length},
    {"sweep.max_um", "100", Kind::length},
    {"sweep.step_um", "2", Kind::length},
    {"sweep.span_nm", "25", Kind::length},
    {"sweep.points", "6001", Kind::odd_integer},
    {"sweep.z_order", "256", Kind::integer},
    {"probability.tail_threshold", "0.005", Kind::number},
};

const KeySpec* find_key(std::string_view key) {
  for (const auto& k : kKeys)
    if (key == k.key) return &k;
  return nullptr;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw Error(ErrorCode::ParseError, "'" + std::string(text) + "' is not a number");
  return v;
}

std::string_view unit_of_key(std::string_view key) {
  for (std::string_view u : {"_nm", "_um", "_mm"})
    if (key.size() > u.size() && key.substr(key.size() - u.size()) == u) return key.substr(key.size() - 2);
  return "m";
}

void validate_value(const KeySpec& spec, const std::string& value) {
  if (spec.allow_auto && (value == "auto" || value == "none")) return;
  switch (spec.kind) {
    case Kind::length:
      if (!(parse_length(value, unit_of_key(spec.key)) > 0.0))
        throw Error(ErrorCode::ParseError, "must be a positive length");
      break;
    case Kind::number:
      parse_number(value);
      break;
    case Kind::integer:
    case Kind::odd_integer: {
      const double v = parse_number(value);
      if (v != std::floor(v) || v <= 0.0) throw Error(ErrorCode::ParseError, "must be a positive integer");
      if (spec.kind == Kind::odd_integer && static_cast<long long>(v) % 2 == 0)
        throw Error(ErrorCode::ParseError, "must be odd so that zero detuning is sampled");
      break;
    }
    case Kind::axis:
      parse_axis(value);
      break;
    case Kind::pm_type:
      if (value != "type-II" && value != "type_II" && value != "II")
        throw Error(ErrorCode::ParseError, "only type-II phase matching is supported");
      break;
    case Kind::text:
      if (value.empty()) throw Error(ErrorCode::ParseError, "must not be empty");
      break;
  }
}

}  // namespace

double parse_length(std::string_view text, std::string_view default_unit) {
  text = trim(text);
  struct Unit {
    std::string_view suffix;
    double scale;
  };
  static constexpr Unit kUnits[] = {{"pm", 1e-12}, {"nm", 1e-9}, {"um", 1e-6}, {"\xC2\xB5m", 1e-6},
                                    {"mm", 1e-3}, {"m", 1.0}};
  for (const auto& u : kUnits) {
    if (text.size() > u.suffix.size() && text.substr(text.size() - u.suffix.size()) == u.suffix) {
      const auto number = trim(text.substr(0, text.size() - u.suffix.size()));
      // "5m" must not swallow the "m" of "mm"/"nm"/"um": those matched earlier.
      return parse_number(number) * u.scale;
    }
  }
  double scale = 1.0;
  for (const auto& u : kUnits)
    if (u.suffix == default_unit) scale = u.scale;
  return parse_number(text) * scale;
}

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_[k.key] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value, std::string_view where) {
  const KeySpec* spec = find_key(key);
  const std::string at = where.empty() ? "" : " (" + std::string(where) + ")";
  if (!spec) throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'" + at);
  try {
    validate_value(*spec, value);
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, "bad value '" + value + "' for config key '" + key + "'" + at + ": " + e.what());
  }
  values_[key] = value;
}

void RunConfig::parse_text(std::string_view text, std::string_view origin) {
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    const std::string where = std::string(origin) + " line " + std::to_string(number);
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::ParseError, "expected 'key = value' (" + where + ")");
    set(std::string(trim(view.substr(0, eq))), std::string(trim(view.substr(eq + 1))), where);
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  parse_text(buffer.str(), path.string());
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw Error(ErrorCode::ParseError, "--set expects key=value, got '" + std::string(assignment) + "'");
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))), "--set");
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ParseError, "unknown config key '" + key + "'");
  return it->second;
}

bool RunConfig::is_auto(const std::string& key) const {
  const auto& v = get(key);
  return v == "auto" || v == "none";
}

double RunConfig::length(const std::string& key) const { return parse_length(get(key), unit_of_key(key)); }
double RunConfig::number(const std::string& key) const { return parse_number(get(key)); }
long long RunConfig::integer(const std::string& key) const { return static_cast<long long>(number(key)); }

SpdcConfig RunConfig::spdc() const {
  CrystalSpec crystal;
  crystal.length = length("crystal.length_mm");
  if (!is_auto("crystal.poling_period_um")) crystal.poling_period = length("crystal.poling_period_um");
  crystal.roles = {parse_axis(get("crystal.pump_axis")), parse_axis(get("crystal.signal_axis")),
                   parse_axis(get("crystal.idler_axis"))};
  if (get("dispersion.file") != "builtin-ktp") crystal.dispersion = DispersionModel::load(get("dispersion.file"));
  if (!is_auto("crystal.temperature_c")) crystal.temperature = number("crystal.temperature_c");
  const double signal_waist = length("signal.waist_um");
  const double idler_waist = is_auto("idler.waist_um") ? signal_waist : length("idler.waist_um");
  std::optional<double> signal_wavelength;
  if (!is_auto("signal.wavelength_nm")) signal_wavelength = length("signal.wavelength_nm");
  SpdcConfig config = SpdcConfig::make(std::move(crystal), length("pump.wavelength_nm"), length("pump.waist_um"),
                                       signal_waist, idler_waist, signal_wavelength);
  config.residual_mismatch = number("crystal.residual_mismatch_per_m");
  config.z_order = static_cast<int>(integer("quadrature.z_order"));
  config.validate();
  return config;
}

DetuningGrid RunConfig::grid(const SpdcConfig& config) const {
  return DetuningGrid::from_wavelength_span(config.signal.center_wavelength, length("grid.span_nm"),
                                            static_cast<std::size_t>(integer("grid.points")));
}

SpdcConfig RunConfig::sweep_spdc() const {
  SpdcConfig config = spdc();
  config.z_order = static_cast<int>(integer("sweep.z_order"));
  return config;
}

DetuningGrid RunConfig::sweep_grid(const SpdcConfig& config) const {
  return DetuningGrid::from_wavelength_span(config.signal.center_wavelength, length("sweep.span_nm"),
                                            static_cast<std::size_t>(integer("sweep.points")));
}

ProbabilityOptions RunConfig::probability_options() const {
  return {.tail_threshold = number("probability.tail_threshold")};
}

nlohmann::json RunConfig::echo() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

}  // namespace lgspdc::cli
