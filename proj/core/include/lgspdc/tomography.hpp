#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lgspdc/simplex.hpp"
#include "lgspdc/state.hpp"

namespace lgspdc {

/// Single-photon probe states in the {|l>, |lt>} basis (the idler uses
/// {|-l>, |-lt>} with the same labels).
enum class ProbeState { l, lt, l_plus_lt, l_minus_lt, l_plus_i_lt, l_minus_i_lt };

inline constexpr std::array<ProbeState, 6> kProbeStates{ProbeState::l,         ProbeState::lt,
                                                        ProbeState::l_plus_lt, ProbeState::l_minus_lt,
                                                        ProbeState::l_plus_i_lt, ProbeState::l_minus_i_lt};

/// "l", "lt", "l+lt", "l-lt", "l+ilt", "l-ilt".
std::string_view to_string(ProbeState state);
ProbeState parse_probe_state(std::string_view text);
Eigen::Vector2cd probe_vector(ProbeState state);

struct Projector {
  int setting_index = 0;  // 6 * signal + idler
  ProbeState signal = ProbeState::l;
  ProbeState idler = ProbeState::l;
  Eigen::Vector4cd vector;  // signal (x) idler

  Eigen::Matrix4cd matrix() const { return vector * vector.adjoint(); }
};

/// 36 product projectors, signal-major.
struct ProjectorSet {
  int ell = 0;
  int ell_tilde = 0;
  std::vector<Projector> projectors;
};

ProjectorSet projector_set(int ell, int ell_tilde);

/// 2x2 rho_spatial on {|l,-l>, |lt,-lt>} placed at indices 0 and 3 of the
/// 4-dimensional {l, lt} (x) {-l, -lt} space.
Eigen::Matrix4cd embed(const Eigen::MatrixXcd& rho_spatial);
/// target_state(l, lt, phase) embedded.
Eigen::Matrix4cd embedded_target(double phase);

struct TomographyRun {
  ProjectorSet projectors;
  std::vector<std::int64_t> counts;  // one per projector
  std::int64_t total_counts = 0;
  std::optional<std::uint64_t> seed;
  std::vector<double> efficiency;  // empty means uniform

  void validate() const;
};

/// Expected counts total * eta_j Tr(rho P_j) / sum_k eta_k Tr(rho P_k), then
/// Poisson draws (mt19937_64) when seeded, nearest-integer rounding otherwise.
TomographyRun simulate_counts(const Eigen::Matrix4cd& rho, const ProjectorSet& projectors,
                              std::int64_t total_counts, std::optional<std::uint64_t> seed = std::nullopt,
                              std::span<const double> efficiency = {});

struct MleOptions {
  SimplexOptions simplex{.max_iterations = 20000, .tolerance = 1e-12, .x_tolerance = 1e-7, .restarts = 3};
};

struct MleResult {
  Eigen::Matrix4cd rho;
  double log_likelihood = 0.0;  // Poisson, with the count scale profiled out
  bool converged = false;
  bool restarted = false;  // second run from linear inversion was needed
  int iterations = 0;
};

/// Poisson log-likelihood sum(n log mu - mu) with mu_j = s eta_j Tr(rho P_j)
/// and the scale s at its optimum sum(n) / sum(eta Tr(rho P)); log n! dropped.
double poisson_log_likelihood(const TomographyRun& run, const Eigen::Matrix4cd& rho);

/// Least-squares inversion of the Born rule, projected to the nearest PSD
/// trace-1 matrix.
Eigen::Matrix4cd linear_inversion(const TomographyRun& run);

/// Maximum-likelihood state, rho = T^dagger T / Tr with T lower-triangular.
MleResult mle_reconstruct(const TomographyRun& run, MleOptions options = {});

/// T parameterization helpers (16 reals: 4 diagonal, then re/im below it).
Eigen::Matrix4cd rho_from_parameters(std::span<const double> t);
std::vector<double> parameters_from_rho(const Eigen::Matrix4cd& rho);

/// Sum of diagonal over sum of all entries.
double visibility(const Eigen::MatrixXd& crosstalk);

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// Counts CSV: setting_index,signal_state,idler_state,counts.
void write_counts_csv(std::ostream& out, const TomographyRun& run);
/// Parses a counts file for the (l, lt) subspace; ParseError with the row
/// number on schema violations.
TomographyRun read_counts_csv(std::istream& in, int ell, int ell_tilde);

}  // namespace lgspdc
