#include "lgspdc/dispersion.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "lgspdc/error.hpp"
#include "lgspdc/units.hpp"

namespace lgspdc {

namespace {

#include "ktp_default_data.inc"  // defines kKtpDefaultData

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view text, int line) {
  text = trim(text);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": not a number: '" + std::string(text) + "'");
  return value;
}

// "[a, b, c]" -> numbers; "[(x, y), (x, y)]" -> flattened numbers.
std::vector<double> parse_list(std::string_view text, int line) {
  text = trim(text);
  if (text.size() < 2 || text.front() != '[' || text.back() != ']')
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line) + ": expected a bracketed list");
  std::string body(text.substr(1, text.size() - 2));
  std::replace(body.begin(), body.end(), '(', ' ');
  std::replace(body.begin(), body.end(), ')', ' ');
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const auto next = body.find(',', pos);
    const auto item = trim(std::string_view(body).substr(
        pos, next == std::string::npos ? std::string::npos : next - pos));
    if (!item.empty()) out.push_back(parse_number(item, line));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace

std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::pump: return "pump";
    case Role::signal: return "signal";
    case Role::idler: return "idler";
  }
  return "?";
}

Axis parse_axis(std::string_view text) {
  text = trim(text);
  if (text == "x") return Axis::x;
  if (text == "y") return Axis::y;
  if (text == "z") return Axis::z;
  throw Error(ErrorCode::ParseError, "unknown crystal axis '" + std::string(text) + "'");
}

double SellmeierCoefficients::index(double wavelength_um) const {
  const double l2 = wavelength_um * wavelength_um;
  double n2 = a - ir * l2;
  for (const auto& [b, c] : poles) n2 += b * l2 / (l2 - c);
  return std::sqrt(n2);
}

double IndexTable::index(double wavelength) const {
  const auto it = std::upper_bound(wavelengths.begin(), wavelengths.end(), wavelength);
  if (it == wavelengths.begin()) return indices.front();
  if (it == wavelengths.end()) return indices.back();
  const auto i = static_cast<std::size_t>(it - wavelengths.begin());
  const double t = (wavelength - wavelengths[i - 1]) / (wavelengths[i] - wavelengths[i - 1]);
  return indices[i - 1] + t * (indices[i] - indices[i - 1]);
}

DispersionModel::DispersionModel(std::array<std::optional<AxisDispersion>, 3> axes,
                                 double min_wavelength, double max_wavelength)
    : axes_(std::move(axes)), min_wavelength_(min_wavelength), max_wavelength_(max_wavelength) {
  if (!(min_wavelength > 0.0) || !(max_wavelength > min_wavelength))
    throw Error(ErrorCode::InvalidArgument, "dispersion valid range must satisfy 0 < min < max");
  for (const auto& axis : axes_) {
    if (!axis) continue;
    if (const auto* table = std::get_if<IndexTable>(&*axis)) {
      if (table->wavelengths.size() < 2 || table->wavelengths.size() != table->indices.size())
        throw Error(ErrorCode::InvalidArgument, "index table needs >= 2 (wavelength, n) pairs");
      for (std::size_t i = 1; i < table->wavelengths.size(); ++i)
        if (!(table->wavelengths[i] > table->wavelengths[i - 1]))
          throw Error(ErrorCode::InvalidArgument,
                      "index table wavelengths must be strictly increasing");
      for (double n : table->indices)
        if (!(n > 1.0)) throw Error(ErrorCode::InvalidArgument, "tabulated index must be > 1");
    }
  }
}

DispersionModel DispersionModel::builtin_ktp() {
  static const DispersionModel model = [] {
    auto m = parse(kKtpDefaultData);
    m.source_ = "builtin-ktp";
    return m;
  }();
  return model;
}

DispersionModel DispersionModel::parse(std::string_view text) {
  std::array<std::optional<AxisDispersion>, 3> axes{};
  std::optional<std::pair<double, double>> range;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "valid_range_nm") {
      const auto v = parse_list(value, line_no);
      if (v.size() != 2)
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": valid_range_nm needs 2 values");
      range = {units::nm(v[0]), units::nm(v[1])};
      continue;
    }
    if (key.size() > 7 && key.substr(0, 5) == "axis.") {
      const Axis axis = parse_axis(key.substr(5, 1));
      const auto kind = key.substr(6);
      const auto v = parse_list(value, line_no);
      if (kind == ".sellmeier") {
        if (v.size() < 2 || v.size() % 2 != 0)
          throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                                 ": sellmeier list must be [A, B1, C1, ..., F]");
        SellmeierCoefficients s;
        s.a = v.front();
        s.ir = v.back();
        for (std::size_t i = 1; i + 1 < v.size(); i += 2) s.poles.emplace_back(v[i], v[i + 1]);
        axes[static_cast<int>(axis)] = s;
        continue;
      }
      if (kind == ".table") {
        if (v.size() % 2 != 0)
          throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) +
                                                 ": table must be [(lambda_nm, n), ...]");
        IndexTable t;
        for (std::size_t i = 0; i < v.size(); i += 2) {
          t.wavelengths.push_back(units::nm(v[i]));
          t.indices.push_back(v[i + 1]);
        }
        axes[static_cast<int>(axis)] = t;
        continue;
      }
    }
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
  }
  if (!range) throw Error(ErrorCode::ParseError, "missing valid_range_nm");
  return DispersionModel(std::move(axes), range->first, range->second);
}

DispersionModel DispersionModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open dispersion file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  auto model = parse(buffer.str());
  model.source_ = path.string();
  return model;
}

double DispersionModel::refractive_index(double wavelength, Axis axis) const {
  if (!in_range(wavelength))
    throw Error(ErrorCode::OutOfRange, "wavelength " + std::to_string(units::to_nm(wavelength)) +
                                           " nm outside the dispersion model range");
  const auto& entry = axes_[static_cast<int>(axis)];
  if (!entry)
    throw Error(ErrorCode::InvalidArgument,
                "dispersion model has no data for axis " + std::string(to_string(axis)));
  return std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, SellmeierCoefficients>)
          return m.index(units::to_um(wavelength));
        else
          return m.index(wavelength);
      },
      *entry);
}

double refractive_index(const DispersionModel& model, double wavelength, Axis axis) {
  return model.refractive_index(wavelength, axis);
}

Axis PolarizationRoles::axis_of(Role role) const {
  switch (role) {
    case Role::pump: return pump;
    case Role::signal: return signal;
    case Role::idler: return idler;
  }
  return pump;
}

void CrystalSpec::validate() const {
  if (!(length > 0.0)) throw Error(ErrorCode::InvalidArgument, "crystal length must be > 0");
  if (poling_period && !(*poling_period > 0.0))
    throw Error(ErrorCode::InvalidArgument, "poling period must be > 0");
}

namespace {

double wavenumber(const CrystalSpec& crystal, Axis axis, double omega) {
  const double lambda = units::wavelength_of(omega);
  return crystal.dispersion.refractive_index(lambda, axis) * omega / units::speed_of_light;
}

}  // namespace

WaveParams wave_params(const CrystalSpec& crystal, Role role, double center_wavelength) {
  const Axis axis = crystal.roles.axis_of(role);
  const double w0 = units::angular_frequency(center_wavelength);
  const double h = 1e-5 * w0;
  const double km2 = wavenumber(crystal, axis, w0 - 2 * h);
  const double km1 = wavenumber(crystal, axis, w0 - h);
  const double k0 = wavenumber(crystal, axis, w0);
  const double kp1 = wavenumber(crystal, axis, w0 + h);
  const double kp2 = wavenumber(crystal, axis, w0 + 2 * h);
  const double d1 = (km2 - 8.0 * km1 + 8.0 * kp1 - kp2) / (12.0 * h);
  const double d2 = (-km2 + 16.0 * km1 - 30.0 * k0 + 16.0 * kp1 - kp2) / (12.0 * h * h);
  return WaveParams{k0, 1.0 / d1, d2, center_wavelength};
}

namespace {

double material_mismatch(const CrystalSpec& crystal, double lp, double ls, double li) {
  const auto& d = crystal.dispersion;
  const auto& r = crystal.roles;
  const double kp = 2 * units::pi * d.refractive_index(lp, r.pump) / lp;
  const double ks = 2 * units::pi * d.refractive_index(ls, r.signal) / ls;
  const double ki = 2 * units::pi * d.refractive_index(li, r.idler) / li;
  return kp - ks - ki;
}

}  // namespace

double phase_mismatch0(const CrystalSpec& crystal, double lambda_p, double lambda_s,
                       double lambda_i) {
  const double lhs = 1.0 / lambda_p;
  const double rhs = 1.0 / lambda_s + 1.0 / lambda_i;
  if (std::abs(lhs - rhs) > 1e-9 * lhs)
    throw Error(ErrorCode::EnergyMismatch, "1/lambda_p != 1/lambda_s + 1/lambda_i");
  const double period =
      crystal.poling_period ? *crystal.poling_period : degenerate_poling_period(crystal, lambda_p);
  return material_mismatch(crystal, lambda_p, lambda_s, lambda_i) - 2 * units::pi / period;
}

double degenerate_poling_period(const CrystalSpec& crystal, double lambda_p) {
  constexpr double lo = 1e-6, hi = 100e-6;
  const auto& d = crystal.dispersion;
  if (!d.in_range(lambda_p) || !d.in_range(2 * lambda_p))
    throw Error(ErrorCode::NoRoot, "pump or degenerate wavelength outside the dispersion range");
  // The mismatch dk - 2 pi / Lambda is monotone in Lambda, so a sign change on
  // [lo, hi] exists iff the exact root lies inside the bracket.
  const double dk = material_mismatch(crystal, lambda_p, 2 * lambda_p, 2 * lambda_p);
  if (!(dk > 0.0)) throw Error(ErrorCode::NoRoot, "material mismatch is not positive");
  const double period = 2 * units::pi / dk;
  if (period < lo || period > hi)
    throw Error(ErrorCode::NoRoot, "poling period outside [1 um, 100 um]");
  return period;
}

}  // namespace lgspdc
