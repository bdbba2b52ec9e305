#pragma once

#include <numbers>

// Physical constants and the nm/um/mm <-> SI conversions used at every
// boundary (config files, CLI flags, CSV columns). Internally everything is SI.
namespace lgspdc::units {

inline constexpr double speed_of_light = 299792458.0;  // m/s
inline constexpr double pi = std::numbers::pi;

constexpr double nm(double v) { return v * 1e-9; }
constexpr double um(double v) { return v * 1e-6; }
constexpr double mm(double v) { return v * 1e-3; }

constexpr double to_nm(double meters) { return meters * 1e9; }
constexpr double to_um(double meters) { return meters * 1e6; }
constexpr double to_mm(double meters) { return meters * 1e3; }

constexpr double angular_frequency(double wavelength) {
  return 2.0 * pi * speed_of_light / wavelength;
}
constexpr double wavelength_of(double angular_frequency) {
  return 2.0 * pi * speed_of_light / angular_frequency;
}

}  // namespace lgspdc::units
