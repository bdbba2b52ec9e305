#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lgspdc/biphoton.hpp"

namespace lgspdc {

/// Top-hat filter on the signal wavelength.
struct SpectralWindow {
  double center_wavelength = 0.0;  // m
  double width = 0.0;              // m, full width
};

/// Joint (signal, idler) LG-mode probabilities over a truncated subspace,
/// normalized to total 1. Modes are ordered by l ascending, then p.
struct ModeCorrelationMatrix {
  std::vector<LGIndex> signal_modes;
  std::vector<LGIndex> idler_modes;
  Eigen::MatrixXd probabilities;  // rows: signal, columns: idler
  std::optional<SpectralWindow> window;
  int p_max = 0;
  int ell_max = 0;
  double raw_total = 0.0;  // sum of unnormalized entries
};

struct CorrelationOptions {
  unsigned threads = 1;
  int window_points = 101;  // samples across a spectral window
};

ModeCorrelationMatrix joint_correlation_matrix(const SpdcConfig& config, int p_max, int ell_max,
                                               const DetuningGrid& grid,
                                               std::optional<SpectralWindow> window = std::nullopt,
                                               CorrelationOptions options = {});

/// How one OAM channel |l, -l> is collected: Gaussian (p = 0) with its own
/// waists, or a radial superposition.
struct CollectionMode {
  int ell = 0;
  double signal_waist = 0.0;
  double idler_waist = 0.0;
  std::optional<SuperpositionModes> modes;
  std::string label;

  static CollectionMode gaussian(int ell, double waist, std::string label = {});
};

/// Raw spectrum of the collected channel.
ComplexSpectrum collection_spectrum(const SpdcConfig& config, const CollectionMode& mode,
                                    const DetuningGrid& grid);

/// int a(Omega) b*(Omega) dOmega of the unit-normalized spectra.
std::complex<double> spectral_overlap(const ComplexSpectrum& a, const ComplexSpectrum& b);
std::complex<double> spectral_overlap(const SpdcConfig& config, const CollectionMode& a,
                                      const CollectionMode& b, const DetuningGrid& grid);

/// rho_spatial with entries A_{l,lt} = int C_l C_lt^* dOmega, trace-normalized.
struct SpatialDensityMatrix {
  std::vector<std::string> labels;
  std::vector<int> ells;
  Eigen::MatrixXcd rho;
};

SpatialDensityMatrix reduced_spatial_density(const SpdcConfig& config,
                                             std::span<const CollectionMode> subspace,
                                             const DetuningGrid& grid, unsigned threads = 1);

double purity(const Eigen::MatrixXcd& rho);
/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma);
/// Hermitian square root with negative eigenvalues clamped to 0.
Eigen::MatrixXcd sqrtm_psd(const Eigen::MatrixXcd& rho);

/// Projector onto (|l,-l> + e^{i phase} |lt,-lt>) / sqrt 2.
SpatialDensityMatrix target_state(int ell, int ell_tilde, double phase = 0.0);

struct PhaseScan {
  double phase = 0.0;
  double fidelity = 0.0;
};

/// Maximum of fidelity(rho, target(phase)) over phase in [0, 2 pi): a grid
/// scan followed by golden-section refinement around the best sample.
PhaseScan max_fidelity_over_phase(const Eigen::MatrixXcd& rho,
                                  const std::function<Eigen::MatrixXcd(double)>& target,
                                  int samples = 720);

}  // namespace lgspdc
