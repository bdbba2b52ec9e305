#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace lgspdc {

enum class Axis { x = 0, y = 1, z = 2 };
enum class Role { pump, signal, idler };

std::string_view to_string(Axis axis);
std::string_view to_string(Role role);
Axis parse_axis(std::string_view text);

/// n^2 = a + sum_j B_j lambda^2 / (lambda^2 - C_j) - ir * lambda^2, lambda in um.
struct SellmeierCoefficients {
  double a = 1.0;
  std::vector<std::pair<double, double>> poles;  // (B_j, C_j)
  double ir = 0.0;

  double index(double wavelength_um) const;
};

/// Linearly interpolated index samples; wavelengths strictly increasing (m).
struct IndexTable {
  std::vector<double> wavelengths;
  std::vector<double> indices;

  double index(double wavelength) const;
};

using AxisDispersion = std::variant<SellmeierCoefficients, IndexTable>;

/// Refractive-index model of a biaxial crystal, one entry per principal axis,
/// valid on a closed wavelength interval.
class DispersionModel {
 public:
  DispersionModel() = default;
  DispersionModel(std::array<std::optional<AxisDispersion>, 3> axes, double min_wavelength,
                  double max_wavelength);

  /// Shipped KTP set (core/data/ktp_default.disp).
  static DispersionModel builtin_ktp();
  /// Parses the key-value dispersion data format.
  static DispersionModel parse(std::string_view text);
  static DispersionModel load(const std::filesystem::path& path);

  double refractive_index(double wavelength, Axis axis) const;

  bool has_axis(Axis axis) const { return axes_[static_cast<int>(axis)].has_value(); }
  bool in_range(double wavelength) const {
    return wavelength >= min_wavelength_ && wavelength <= max_wavelength_;
  }
  double min_wavelength() const { return min_wavelength_; }
  double max_wavelength() const { return max_wavelength_; }
  const std::string& source() const { return source_; }

 private:
  std::array<std::optional<AxisDispersion>, 3> axes_{};
  double min_wavelength_ = 0.0;
  double max_wavelength_ = 0.0;
  std::string source_ = "custom";
};

/// Which principal axis each field is polarized along. Default is the usual
/// type-II assignment for ppKTP at 405 -> 810 nm (y -> y + z).
struct PolarizationRoles {
  Axis pump = Axis::y;
  Axis signal = Axis::y;
  Axis idler = Axis::z;

  Axis axis_of(Role role) const;
};

enum class PhaseMatchingType { type_II };

struct CrystalSpec {
  double length = 0.0;                   // m
  std::optional<double> poling_period;   // m; empty means solve for degeneracy
  PhaseMatchingType pm_type = PhaseMatchingType::type_II;
  PolarizationRoles roles;
  DispersionModel dispersion = DispersionModel::builtin_ktp();
  std::optional<double> temperature;     // recorded only

  void validate() const;
};

struct WaveParams {
  double k0 = 0.0;                 // rad/m
  double u0 = 0.0;                 // m/s, group velocity
  double G0 = 0.0;                 // s^2/m, group-velocity dispersion
  double center_wavelength = 0.0;  // m
};

double refractive_index(const DispersionModel& model, double wavelength, Axis axis);

/// k0, 1/(dk/domega) and d2k/domega2 at the centre frequency, from 5-point
/// central differences in omega with relative step 1e-5.
WaveParams wave_params(const CrystalSpec& crystal, Role role, double center_wavelength);

/// k_p - k_s - k_i - 2 pi / Lambda at the centre wavelengths. An unset
/// poling period is resolved with degenerate_poling_period(lambda_p) first.
double phase_mismatch0(const CrystalSpec& crystal, double lambda_p, double lambda_s,
                       double lambda_i);

/// Poling period that zeroes the mismatch at collinear degeneracy.
double degenerate_poling_period(const CrystalSpec& crystal, double lambda_p);

}  // namespace lgspdc
