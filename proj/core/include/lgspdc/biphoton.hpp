#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "lgspdc/dispersion.hpp"
#include "lgspdc/lgmodes.hpp"

namespace lgspdc {

/// Collinear type-II source: crystal, Gaussian pump, and the Gaussian
/// collection beams of the two down-converted photons.
struct SpdcConfig {
  CrystalSpec crystal;
  BeamSpec pump;
  BeamSpec signal;
  BeamSpec idler;
  WaveParams pump_wave;
  WaveParams signal_wave;
  WaveParams idler_wave;
  double center_mismatch = 0.0;    // k_p - k_s - k_i - 2pi/Lambda at the centre, rad/m
  double residual_mismatch = 0.0;  // extra user mismatch, rad/m
  int z_order = 64;                // Gauss-Legendre nodes over the crystal

  /// Fills in wave parameters and the centre mismatch. An empty signal
  /// wavelength means degenerate (2 lambda_p); the idler follows from energy
  /// conservation.
  static SpdcConfig make(CrystalSpec crystal, double pump_wavelength, double pump_waist,
                         double signal_waist, double idler_waist,
                         std::optional<double> signal_wavelength = std::nullopt);

  /// Copy with new collection waists (dispersion data is reused).
  SpdcConfig with_waists(double signal_waist, double idler_waist) const;
  /// Copy with the signal and idler roles exchanged.
  SpdcConfig swapped_roles() const;

  double total_mismatch() const { return center_mismatch + residual_mismatch; }
  double signal_omega0() const;

  void validate() const;
};

/// Uniform, symmetric detuning grid (rad/s) for the signal photon; the idler
/// sits at -Omega.
class DetuningGrid {
 public:
  DetuningGrid() = default;
  explicit DetuningGrid(std::vector<double> omega);

  static DetuningGrid uniform(std::size_t count, double omega_max);
  /// Grid covering signal wavelengths center +- half_span (the larger of the
  /// two frequency offsets sets the symmetric extent).
  static DetuningGrid from_wavelength_span(double center_wavelength, double half_span,
                                           std::size_t count = 2001);

  const std::vector<double>& omega() const { return omega_; }
  std::size_t size() const { return omega_.size(); }
  double step() const { return omega_.size() > 1 ? omega_[1] - omega_[0] : 0.0; }
  double front() const { return omega_.front(); }
  double back() const { return omega_.back(); }

  friend bool operator==(const DetuningGrid&, const DetuningGrid&) = default;

 private:
  std::vector<double> omega_;
};

enum class Normalization { raw, unit_l2 };

struct ComplexSpectrum {
  DetuningGrid grid;
  std::vector<std::complex<double>> values;
  int p_s = 0;
  int p_i = 0;
  int ell = 0;
  Normalization normalization = Normalization::raw;

  /// Trapezoid integral of |C|^2 over the grid.
  double norm2() const;
  void normalize();
};

/// Radial-mode superposition of the collection optics: the idler is
/// collected in sum_p A_p |p, -l> and the signal in sum_p B_p |p, l>.
struct SuperpositionModes {
  std::vector<std::complex<double>> idler;   // A over p_i = 0..p_max
  std::vector<std::complex<double>> signal;  // B over p_s = 0..p_max

  /// Equal real weights 1/sqrt(p_max+1) on both photons.
  static SuperpositionModes uniform(int p_max);
  int p_max() const { return static_cast<int>(idler.size()) - 1; }
  /// Rescales A and B to unit norm; InvalidArgument if either is zero.
  void normalize();
};

/// Weighted z-integrand of one amplitude on the Gauss-Legendre nodes: the
/// amplitude at Omega is sum_k values[k] exp(i z_k phi(Omega)).
struct LongitudinalProfile {
  std::vector<double> z;
  std::vector<std::complex<double>> values;
};

LongitudinalProfile longitudinal_profile(const SpdcConfig& config, int p_s, int p_i, int ell);

/// Longitudinal phase rate phi(Omega) = Omega/u_i - Omega/u_s - Omega^2 (G_i+G_s)/2 + dk0.
double longitudinal_phase_rate(const SpdcConfig& config, double omega);

std::complex<double> evaluate_profile(const LongitudinalProfile& profile, double phase_rate);

/// Closed-form amplitude C_{p_s,p_i}^{|l|}(Omega) (raw, proportionality constant 1).
std::complex<double> mode_amplitude(const SpdcConfig& config, int p_s, int p_i, int ell,
                                    double omega);

ComplexSpectrum spectrum(const SpdcConfig& config, int p_s, int p_i, int ell,
                         const DetuningGrid& grid, bool normalize = false);

/// C_{u,v}(Omega) = sum A_{p_i} B_{p_s} C_{p_s,p_i}(Omega), raw.
ComplexSpectrum superposition_spectrum(const SpdcConfig& config, int ell,
                                       const SuperpositionModes& modes, const DetuningGrid& grid);

/// Detuning of the |C|^2 maximum, refined by a parabola through the
/// three samples around the largest one.
double peak_detuning(const ComplexSpectrum& spectrum);
/// int Omega |C|^2 / int |C|^2 (trapezoid).
double spectral_centroid(const ComplexSpectrum& spectrum);

/// Residual mismatch (rad/m) that moves the |C|^2 peak of mode
/// (p_s, p_i, l) to the given signal wavelength; a few fixed-point steps
/// absorb the curvature of the longitudinal phase.
double residual_mismatch_for_peak(const SpdcConfig& config, int p_s, int p_i, int ell,
                                  double target_signal_wavelength, const DetuningGrid& grid);

/// Throws DetuningOutOfRange if the grid leaves the small-detuning window.
void check_detuning(const SpdcConfig& config, const DetuningGrid& grid);

/// Fraction of the total |C|^2 trapezoid weight carried by the outer 5% of
/// samples on both sides.
double tail_fraction(std::span<const double> abs2, double step);

struct ProbabilityOptions {
  double tail_threshold = 5e-3;
};

/// Trapezoid integral of |C|^2 over the grid; GridTooNarrow when the tails
/// carry more than the threshold.
double collection_probability(const SpdcConfig& config, int p_s, int p_i, int ell,
                              const DetuningGrid& grid, ProbabilityOptions options = {});

struct QuadratureSpec {
  int radial_nodes = 128;       // Gauss-Legendre per radial variable
  int angular_nodes = 256;      // periodic trapezoid per angle
  double radial_extent = 11.0;  // cut-off in units of 1/waist
  long long max_nodes = 400'000'000;
};

/// Brute-force overlap of the phase-matching function with two LG modes,
/// reduced to two radial integrals and the relative angle; the z-integral is
/// the exact sinc. Scaled to the closed-form convention. Requires
/// p_s, p_i <= 3 and |l| <= 4.
std::complex<double> oracle_amplitude(const SpdcConfig& config, int p_s, int p_i, int ell,
                                      double omega, QuadratureSpec spec = {});

/// Same overlap with both azimuthal angles integrated numerically and
/// independent signal/idler OAM, so the selection rule has to emerge.
std::complex<double> oracle_amplitude_full(const SpdcConfig& config, LGIndex signal,
                                           LGIndex idler, double omega,
                                           QuadratureSpec spec = {.radial_nodes = 64,
                                                                  .angular_nodes = 64});

}  // namespace lgspdc
