#pragma once

#include <complex>
#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lgspdc/biphoton.hpp"
#include "lgspdc/simplex.hpp"

namespace lgspdc {

// ---------------------------------------------------------------------------
// Collection-waist matching

struct WaistRange {
  double min = 10e-6;
  double max = 100e-6;
  double step = 2e-6;

  std::vector<double> samples() const;
};

struct WaistSweepResult {
  int ell = 0;
  std::vector<double> waists;         // m, signal = idler waist
  std::vector<double> probabilities;  // raw P_l

  std::size_t argmax() const;
};

struct SweepOptions {
  unsigned threads = 1;
  ProbabilityOptions probability;
};

/// P_l(w) for the fundamental radial mode with w_s = w_i = w.
WaistSweepResult waist_sweep(const SpdcConfig& config, int ell, const WaistRange& range,
                             const DetuningGrid& grid, SweepOptions options = {});

enum class WaistBranch { small, large };

struct WaistMatch {
  int reference_ell = 0;
  double reference_probability = 0.0;
  std::map<int, double> waists;         // l -> matched waist (m)
  std::map<int, double> probabilities;  // l -> P_l at its waist
  std::vector<WaistSweepResult> sweeps;
};

/// The reference mode keeps its grid-argmax waist; every other l gets the
/// waist where P_l equals the reference probability on the requested branch
/// (below or above its own maximum), refined by bisection between grid
/// brackets. NoCrossing if the level is never reached on that branch.
WaistMatch match_collection_waists(const SpdcConfig& config, std::span<const int> ells, int reference_ell,
                                   const DetuningGrid& grid, const WaistRange& range,
                                   WaistBranch branch = WaistBranch::small, SweepOptions options = {});

// ---------------------------------------------------------------------------
// Radial-mode superpositions

/// All C_{p_s,p_i}^l of one OAM order as longitudinal profiles, plus the
/// Gram matrix that turns profile inner products into exact trapezoid
/// integrals over the detuning grid.
class ModeBasis {
 public:
  ModeBasis(const SpdcConfig& config, int ell, int p_max, const DetuningGrid& grid);

  int ell() const { return ell_; }
  int p_max() const { return p_max_; }
  const DetuningGrid& grid() const { return grid_; }

  /// Combined z-profile of sum A_{p_i} B_{p_s} C_{p_s,p_i}.
  Eigen::VectorXcd profile(const SuperpositionModes& modes) const;
  /// Raw spectrum of the combination on the grid.
  ComplexSpectrum spectrum(const SuperpositionModes& modes) const;
  /// Trapezoid int conj(C_a) C_b dOmega for two combined profiles.
  std::complex<double> inner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) const;
  /// sum over (p_s, p_i) of int |C_{p_s,p_i}|^2 dOmega.
  double total_power() const { return total_power_; }
  /// True when the other basis lives on the same grid and z nodes.
  bool compatible(const ModeBasis& other) const;

 private:
  int ell_;
  int p_max_;
  DetuningGrid grid_;
  Eigen::MatrixXcd profiles_;  // z nodes x (p_max+1)^2, column p_i*(p_max+1)+p_s
  Eigen::MatrixXcd phases_;    // grid x z nodes: exp(i z phi(Omega))
  Eigen::MatrixXcd gram_;      // phases^H W phases
  Eigen::VectorXd z_;
  double total_power_ = 0.0;
};

/// 1 - |int conj(target) C_{u,v}|^2 with C_{u,v} unit-normalized.
double cost_target_spectrum(const SuperpositionModes& modes, const ModeBasis& basis,
                            const ComplexSpectrum& target);
double cost_target_spectrum(const SuperpositionModes& modes, int ell, const ComplexSpectrum& target,
                            const SpdcConfig& config, const DetuningGrid& grid);

/// 1 - int |C_{u,v}|^2 / sum_{p_i,p_s} int |C_{p_i,p_s}|^2 (A, B normalized).
double cost_brightness(const SuperpositionModes& modes, const ModeBasis& basis);
double cost_brightness(const SuperpositionModes& modes, int ell, const SpdcConfig& config, int p_max,
                       const DetuningGrid& grid);

/// 1 - |int conj(C^l) C^l'|^2 / (int |C^l|^2 int |C^l'|^2).
double cost_spectral_match(const SuperpositionModes& modes_l, const ModeBasis& basis_l,
                           const SuperpositionModes& modes_lp, const ModeBasis& basis_lp);
double cost_spectral_match(const SuperpositionModes& modes_l, const SuperpositionModes& modes_lp, int ell,
                           int ell_prime, const SpdcConfig& config, const DetuningGrid& grid);

struct ModeOptimization {
  SuperpositionModes modes;  // normalized
  double start_cost = 0.0;
  double cost = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> trajectory;
};

/// Simplex search over interleaved (re, im) of A then B; A[0] is kept real
/// and nonnegative to fix the global phase, and A, B are renormalized before
/// every cost evaluation.
ModeOptimization minimize(const std::function<double(const SuperpositionModes&)>& cost,
                          const SuperpositionModes& start, SimplexOptions options = {});

/// Parameter vector <-> coefficients (4 p_max + 3 reals).
std::vector<double> pack_modes(const SuperpositionModes& modes);
SuperpositionModes unpack_modes(std::span<const double> x, int p_max);

/// max_p | |A_p| - |B_p| |: gauge-independent difference of the two
/// coefficient weight profiles.
double profile_asymmetry(const SuperpositionModes& modes);

}  // namespace lgspdc
