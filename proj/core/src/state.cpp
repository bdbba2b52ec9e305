#include "lgspdc/state.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "lgspdc/error.hpp"
#include "lgspdc/parallel.hpp"
#include "lgspdc/quadrature.hpp"
#include "lgspdc/units.hpp"

namespace lgspdc {

using cd = std::complex<double>;

namespace {

std::vector<LGIndex> subspace_modes(int p_max, int ell_max) {
  std::vector<LGIndex> modes;
  for (int l = -ell_max; l <= ell_max; ++l)
    for (int p = 0; p <= p_max; ++p) modes.push_back({p, l});
  return modes;
}

// Uniform detuning samples covering the signal-wavelength window.
std::vector<double> window_samples(const SpdcConfig& config, const DetuningGrid& grid,
                                   const SpectralWindow& window, int points) {
  if (!(window.width > 0.0) || !(window.center_wavelength > window.width))
    throw Error(ErrorCode::InvalidArgument, "spectral window needs width > 0 and a valid centre");
  if (points < 3) throw Error(ErrorCode::InvalidArgument, "spectral window needs >= 3 samples");
  const double w0 = config.signal_omega0();
  const double lo = units::angular_frequency(window.center_wavelength + 0.5 * window.width) - w0;
  const double hi = units::angular_frequency(window.center_wavelength - 0.5 * window.width) - w0;
  if (lo < grid.front() || hi > grid.back())
    throw Error(ErrorCode::InvalidArgument, "spectral window lies outside the detuning grid");
  std::vector<double> omega(points);
  for (int k = 0; k < points; ++k) omega[k] = lo + (hi - lo) * k / (points - 1.0);
  return omega;
}

void require_same_grid(const DetuningGrid& a, const DetuningGrid& b) {
  if (!(a == b)) throw Error(ErrorCode::GridMismatch, "spectra live on different detuning grids");
}

}  // namespace

ModeCorrelationMatrix joint_correlation_matrix(const SpdcConfig& config, int p_max, int ell_max,
                                               const DetuningGrid& grid, std::optional<SpectralWindow> window,
                                               CorrelationOptions options) {
  if (p_max < 0 || ell_max < 0) throw Error(ErrorCode::IndexError, "p_max and ell_max must be >= 0");
  if (p_max > 4 || ell_max > 6)
    throw Error(ErrorCode::BudgetExceeded, "correlation matrix limited to p_max <= 4, ell_max <= 6");
  check_detuning(config, grid);

  std::vector<double> omega = grid.omega();
  double h = grid.step();
  if (window) {
    omega = window_samples(config, grid, *window, options.window_points);
    h = omega[1] - omega[0];
  }

  // Amplitudes depend on |l| only: one integral per (|l|, p_s, p_i).
  using Key = std::tuple<int, int, int>;
  std::vector<Key> keys;
  for (int l = 0; l <= ell_max; ++l)
    for (int ps = 0; ps <= p_max; ++ps)
      for (int pi = 0; pi <= p_max; ++pi) keys.emplace_back(l, ps, pi);
  const auto values = parallel_map(
      keys.size(),
      [&](std::size_t k) {
        const auto [l, ps, pi] = keys[k];
        const LongitudinalProfile profile = longitudinal_profile(config, ps, pi, l);
        std::vector<double> abs2(omega.size());
        for (std::size_t j = 0; j < omega.size(); ++j)
          abs2[j] = std::norm(evaluate_profile(profile, longitudinal_phase_rate(config, omega[j])));
        return trapezoid(abs2, h);
      },
      options.threads);
  std::map<Key, double> lookup;
  for (std::size_t k = 0; k < keys.size(); ++k) lookup[keys[k]] = values[k];

  ModeCorrelationMatrix out;
  out.signal_modes = subspace_modes(p_max, ell_max);
  out.idler_modes = out.signal_modes;
  out.window = window;
  out.p_max = p_max;
  out.ell_max = ell_max;
  const auto n = static_cast<Eigen::Index>(out.signal_modes.size());
  out.probabilities = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) {
      const LGIndex s = out.signal_modes[r], i = out.idler_modes[c];
      if (s.ell + i.ell != 0) continue;
      out.probabilities(r, c) = lookup.at({std::abs(s.ell), s.p, i.p});
    }
  out.raw_total = out.probabilities.sum();
  if (!(out.raw_total > 0.0)) throw Error(ErrorCode::InvalidArgument, "correlation matrix has zero total weight");
  out.probabilities /= out.raw_total;
  return out;
}

CollectionMode CollectionMode::gaussian(int ell, double waist, std::string label) {
  CollectionMode mode;
  mode.ell = ell;
  mode.signal_waist = waist;
  mode.idler_waist = waist;
  mode.label = label.empty() ? std::to_string(ell) : std::move(label);
  return mode;
}

ComplexSpectrum collection_spectrum(const SpdcConfig& config, const CollectionMode& mode,
                                    const DetuningGrid& grid) {
  const SpdcConfig local = config.with_waists(mode.signal_waist, mode.idler_waist);
  if (mode.modes) return superposition_spectrum(local, mode.ell, *mode.modes, grid);
  return spectrum(local, 0, 0, mode.ell, grid);
}

cd spectral_overlap(const ComplexSpectrum& a, const ComplexSpectrum& b) {
  require_same_grid(a.grid, b.grid);
  if (a.values.size() != b.values.size()) throw Error(ErrorCode::GridMismatch, "spectra differ in length");
  const double na = a.norm2(), nb = b.norm2();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(ErrorCode::InvalidArgument, "overlap of an all-zero spectrum");
  const auto w = trapezoid_weights(a.values.size(), a.grid.step());
  cd sum = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) sum += w[k] * a.values[k] * std::conj(b.values[k]);
  return sum / std::sqrt(na * nb);
}

cd spectral_overlap(const SpdcConfig& config, const CollectionMode& a, const CollectionMode& b,
                    const DetuningGrid& grid) {
  return spectral_overlap(collection_spectrum(config, a, grid), collection_spectrum(config, b, grid));
}

SpatialDensityMatrix reduced_spatial_density(const SpdcConfig& config, std::span<const CollectionMode> subspace,
                                             const DetuningGrid& grid, unsigned threads) {
  if (subspace.empty()) throw Error(ErrorCode::InvalidArgument, "density matrix needs a nonempty subspace");
  const auto spectra = parallel_map(
      subspace.size(), [&](std::size_t k) { return collection_spectrum(config, subspace[k], grid); }, threads);
  const auto w = trapezoid_weights(grid.size(), grid.step());
  const auto d = static_cast<Eigen::Index>(subspace.size());
  SpatialDensityMatrix out;
  out.rho = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    out.labels.push_back(subspace[r].label.empty() ? std::to_string(subspace[r].ell) : subspace[r].label);
    out.ells.push_back(subspace[r].ell);
    for (Eigen::Index c = r; c < d; ++c) {
      cd sum = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) sum += w[k] * spectra[r].values[k] * std::conj(spectra[c].values[k]);
      if (r == c) sum = sum.real();
      out.rho(r, c) = sum;
      out.rho(c, r) = std::conj(sum);
    }
  }
  const double trace = out.rho.trace().real();
  if (!(trace > 0.0)) throw Error(ErrorCode::InvalidArgument, "collected state has zero weight");
  out.rho /= trace;
  return out;
}

double purity(const Eigen::MatrixXcd& rho) {
  if (rho.rows() != rho.cols() || rho.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "purity needs a nonempty square matrix");
  return (rho * rho).trace().real();
}

Eigen::MatrixXcd sqrtm_psd(const Eigen::MatrixXcd& rho) {
  const Eigen::MatrixXcd herm = 0.5 * (rho + rho.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm);
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().adjoint();
}

double fidelity(const Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& sigma) {
  if (rho.rows() != rho.cols() || sigma.rows() != sigma.cols() || rho.rows() != sigma.rows() || rho.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "fidelity needs square matrices of equal dimension");
  // A pure argument reduces the fidelity to <psi|other|psi>, which avoids the
  // sqrt(0) noise (~1e-8) of the general route.
  for (const auto* pure : {&sigma, &rho}) {
    const double tr = pure->trace().real();
    if (tr > 0.0 && std::abs((*pure * *pure).trace().real() - tr * tr) <= 1e-14 * tr * tr) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (*pure + pure->adjoint()));
      const Eigen::Index top = eig.eigenvalues().size() - 1;
      const Eigen::VectorXcd psi = eig.eigenvectors().col(top) * std::sqrt(std::max(eig.eigenvalues()(top), 0.0));
      const Eigen::MatrixXcd& other = pure == &sigma ? rho : sigma;
      return std::clamp((psi.adjoint() * other * psi)(0, 0).real(), 0.0, 1.0);
    }
  }
  const Eigen::MatrixXcd s = sqrtm_psd(rho);
  const Eigen::MatrixXcd m = s * sigma * s;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
  const double tr = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

SpatialDensityMatrix target_state(int ell, int ell_tilde, double phase) {
  if (ell == ell_tilde)
    throw Error(ErrorCode::DegenerateSubspace, "target state needs two distinct OAM values");
  Eigen::Vector2cd psi(1.0, std::polar(1.0, phase));
  psi /= std::sqrt(2.0);
  SpatialDensityMatrix out;
  out.labels = {std::to_string(ell), std::to_string(ell_tilde)};
  out.ells = {ell, ell_tilde};
  out.rho = psi * psi.adjoint();
  return out;
}

PhaseScan max_fidelity_over_phase(const Eigen::MatrixXcd& rho,
                                  const std::function<Eigen::MatrixXcd(double)>& target, int samples) {
  if (samples < 8) throw Error(ErrorCode::InvalidArgument, "phase scan needs >= 8 samples");
  const double step = 2.0 * units::pi / samples;
  auto f = [&](double phi) { return fidelity(rho, target(phi)); };
  PhaseScan best{0.0, f(0.0)};
  for (int k = 1; k < samples; ++k) {
    const double v = f(k * step);
    if (v > best.fidelity) best = {k * step, v};
  }
  // Golden-section search on the bracket around the best sample.
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = best.phase - step, b = best.phase + step;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
    if (f1 > f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - g * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + g * (b - a), f2 = f(x2);
    }
  }
  const double x = 0.5 * (a + b), v = f(x);
  if (v > best.fidelity) best = {std::fmod(x + 2.0 * units::pi, 2.0 * units::pi), v};
  return best;
}

}  // namespace lgspdc
