#pragma once

// Source configurations shared by the unit and acceptance tests.

#include "lgspdc/biphoton.hpp"
#include "lgspdc/units.hpp"

namespace lgspdc::fixtures {

using namespace lgspdc::units;

/// 10 mm ppKTP, 405 nm pump: the waist-matching geometry.
inline SpdcConfig matching_config(double pump_waist_um = 142.0, double collection_waist_um = 42.0) {
  CrystalSpec crystal;
  crystal.length = mm(10.0);
  return SpdcConfig::make(crystal, nm(405.0), um(pump_waist_um), um(collection_waist_um),
                          um(collection_waist_um));
}

/// 20 mm ppKTP, 404.8 nm pump, 60 um pump / 30 um collection: the mode
/// decomposition geometry. The crystal spans several Rayleigh ranges, so 64
/// z nodes leave ~3e-7 relative error at p = 3; 128 converge to 1e-13.
inline SpdcConfig decomposition_config() {
  CrystalSpec crystal;
  crystal.length = mm(20.0);
  SpdcConfig config = SpdcConfig::make(crystal, nm(404.8), um(60.0), um(30.0), um(30.0));
  config.z_order = 128;
  return config;
}

/// 10 mm crystal with 50 um pump and collection: the superposition geometry.
inline SpdcConfig superposition_config() {
  CrystalSpec crystal;
  crystal.length = mm(10.0);
  return SpdcConfig::make(crystal, nm(405.0), um(50.0), um(50.0), um(50.0));
}

/// 2001 points over +-6 nm around the signal centre.
inline DetuningGrid default_grid(const SpdcConfig& config, std::size_t points = 2001) {
  return DetuningGrid::from_wavelength_span(config.signal.center_wavelength, nm(6.0), points);
}

/// Waist sweeps reach 10 um collection waists: their spectra extend past
/// +-6 nm and the z-integrand (Rayleigh range << L) needs more nodes.
inline SpdcConfig for_sweeps(SpdcConfig config) {
  config.z_order = 256;
  return config;
}

/// 6001 points over +-25 nm.
inline DetuningGrid sweep_grid(const SpdcConfig& config) {
  return DetuningGrid::from_wavelength_span(config.signal.center_wavelength, nm(25.0), 6001);
}

}  // namespace lgspdc::fixtures
