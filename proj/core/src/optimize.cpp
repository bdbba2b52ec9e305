#include "lgspdc/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <set>
#include <string>

#include "lgspdc/error.hpp"
#include "lgspdc/parallel.hpp"
#include "lgspdc/quadrature.hpp"

namespace lgspdc {

using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// Waists

std::vector<double> WaistRange::samples() const {
  if (!(step > 0.0) || !(min > 0.0) || !(min < max))
    throw Error(ErrorCode::InvalidArgument, "waist range needs 0 < min < max and step > 0");
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double w = min + k * step;
    if (w > max + 1e-9 * step) break;
    out.push_back(w);
  }
  return out;
}

std::size_t WaistSweepResult::argmax() const {
  if (probabilities.empty()) throw Error(ErrorCode::InvalidArgument, "empty waist sweep");
  return static_cast<std::size_t>(std::max_element(probabilities.begin(), probabilities.end()) -
                                  probabilities.begin());
}

namespace {

double probability_at(const SpdcConfig& config, int ell, double waist, const DetuningGrid& grid,
                      const ProbabilityOptions& options) {
  return collection_probability(config.with_waists(waist, waist), 0, 0, ell, grid, options);
}

}  // namespace

WaistSweepResult waist_sweep(const SpdcConfig& config, int ell, const WaistRange& range,
                             const DetuningGrid& grid, SweepOptions options) {
  WaistSweepResult out;
  out.ell = ell;
  out.waists = range.samples();
  out.probabilities = parallel_map(
      out.waists.size(),
      [&](std::size_t k) { return probability_at(config, ell, out.waists[k], grid, options.probability); },
      options.threads);
  return out;
}

WaistMatch match_collection_waists(const SpdcConfig& config, std::span<const int> ells, int reference_ell,
                                   const DetuningGrid& grid, const WaistRange& range, WaistBranch branch,
                                   SweepOptions options) {
  std::vector<int> all(ells.begin(), ells.end());
  if (std::find(all.begin(), all.end(), reference_ell) == all.end()) all.push_back(reference_ell);
  std::set<int> seen;
  all.erase(std::remove_if(all.begin(), all.end(), [&](int l) { return !seen.insert(l).second; }), all.end());

  WaistMatch out;
  out.reference_ell = reference_ell;
  for (int l : all) out.sweeps.push_back(waist_sweep(config, l, range, grid, options));

  const auto& ref = *std::find_if(out.sweeps.begin(), out.sweeps.end(),
                                  [&](const WaistSweepResult& s) { return s.ell == reference_ell; });
  const std::size_t ref_k = ref.argmax();
  const double level = ref.probabilities[ref_k];
  out.reference_probability = level;

  for (const auto& sweep : out.sweeps) {
    if (sweep.ell == reference_ell) {
      if (std::find(ells.begin(), ells.end(), reference_ell) != ells.end()) {
        out.waists[sweep.ell] = ref.waists[ref_k];
        out.probabilities[sweep.ell] = level;
      }
      continue;
    }
    const auto& p = sweep.probabilities;
    const std::size_t peak = sweep.argmax();
    std::optional<std::pair<std::size_t, std::size_t>> bracket;
    if (branch == WaistBranch::small) {
      if (p.front() >= level)
        throw Error(ErrorCode::NoCrossing, "P_l for l=" + std::to_string(sweep.ell) +
                                               " already exceeds the reference level at the smallest waist");
      for (std::size_t k = 1; k <= peak && !bracket; ++k)
        if (p[k - 1] < level && p[k] >= level) bracket = {{k - 1, k}};
    } else {
      for (std::size_t k = p.size() - 1; k > peak && !bracket; --k)
        if (p[k] < level && p[k - 1] >= level) bracket = {{k - 1, k}};
    }
    if (!bracket)
      throw Error(ErrorCode::NoCrossing, "P_l for l=" + std::to_string(sweep.ell) +
                                             " never reaches the reference level on the requested branch");

    // f(lo) and f(hi) have opposite signs by construction.
    double lo = sweep.waists[bracket->first], hi = sweep.waists[bracket->second];
    const double f_lo = p[bracket->first] - level;
    double w = 0.5 * (lo + hi), pw = 0.0;
    for (int it = 0; it < 80; ++it) {
      w = 0.5 * (lo + hi);
      pw = probability_at(config, sweep.ell, w, grid, options.probability);
      const double f = pw - level;
      if (std::abs(f) <= 1e-10 * level || hi - lo < 1e-13) break;
      if ((f < 0.0) == (f_lo < 0.0))
        lo = w;
      else
        hi = w;
    }
    out.waists[sweep.ell] = w;
    out.probabilities[sweep.ell] = pw;
  }
  return out;
}

// ---------------------------------------------------------------------------
// ModeBasis

ModeBasis::ModeBasis(const SpdcConfig& config, int ell, int p_max, const DetuningGrid& grid)
    : ell_(ell), p_max_(p_max), grid_(grid) {
  if (p_max < 0) throw Error(ErrorCode::IndexError, "p_max must be >= 0");
  check_detuning(config, grid);
  const int n = p_max + 1;
  for (int pi = 0; pi < n; ++pi)
    for (int ps = 0; ps < n; ++ps) {
      const LongitudinalProfile prof = longitudinal_profile(config, ps, pi, ell);
      if (profiles_.size() == 0) {
        profiles_.resize(static_cast<Eigen::Index>(prof.z.size()), n * n);
        z_ = Eigen::Map<const Eigen::VectorXd>(prof.z.data(), static_cast<Eigen::Index>(prof.z.size()));
      }
      profiles_.col(pi * n + ps) =
          Eigen::Map<const Eigen::VectorXcd>(prof.values.data(), static_cast<Eigen::Index>(prof.values.size()));
    }
  const auto rows = static_cast<Eigen::Index>(grid.size());
  phases_.resize(rows, z_.size());
  for (Eigen::Index j = 0; j < rows; ++j) {
    const double rate = longitudinal_phase_rate(config, grid.omega()[j]);
    for (Eigen::Index k = 0; k < z_.size(); ++k) phases_(j, k) = std::polar(1.0, z_(k) * rate);
  }
  const auto w = trapezoid_weights(grid.size(), grid.step());
  const Eigen::Map<const Eigen::VectorXd> weights(w.data(), rows);
  gram_ = phases_.adjoint() * weights.asDiagonal() * phases_;
  total_power_ = 0.0;
  for (Eigen::Index c = 0; c < profiles_.cols(); ++c)
    total_power_ += (profiles_.col(c).adjoint() * gram_ * profiles_.col(c))(0, 0).real();
}

Eigen::VectorXcd ModeBasis::profile(const SuperpositionModes& modes) const {
  if (modes.p_max() != p_max_ || modes.signal.size() != modes.idler.size())
    throw Error(ErrorCode::DimensionMismatch, "superposition size does not match the mode basis");
  const int n = p_max_ + 1;
  Eigen::VectorXcd c(n * n);
  for (int pi = 0; pi < n; ++pi)
    for (int ps = 0; ps < n; ++ps) c(pi * n + ps) = modes.idler[pi] * modes.signal[ps];
  return profiles_ * c;
}

ComplexSpectrum ModeBasis::spectrum(const SuperpositionModes& modes) const {
  const Eigen::VectorXcd v = phases_ * profile(modes);
  ComplexSpectrum out;
  out.grid = grid_;
  out.ell = ell_;
  out.values.assign(v.data(), v.data() + v.size());
  return out;
}

cd ModeBasis::inner(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) const {
  return (a.adjoint() * gram_ * b)(0, 0);
}

bool ModeBasis::compatible(const ModeBasis& other) const {
  return grid_ == other.grid_ && z_.size() == other.z_.size() && z_ == other.z_ &&
         (gram_ - other.gram_).norm() <= 1e-12 * gram_.norm();
}

// ---------------------------------------------------------------------------
// Costs

namespace {

SuperpositionModes normalized(SuperpositionModes modes) {
  modes.normalize();
  return modes;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

double cost_target_spectrum(const SuperpositionModes& modes, const ModeBasis& basis, const ComplexSpectrum& target) {
  if (!(target.grid == basis.grid()) || target.values.size() != basis.grid().size())
    throw Error(ErrorCode::GridMismatch, "target spectrum and mode basis use different grids");
  const SuperpositionModes m = normalized(modes);
  const Eigen::VectorXcd v = basis.profile(m);
  const double power = basis.inner(v, v).real();
  const double target_power = target.norm2();
  if (!(power > 0.0) || !(target_power > 0.0)) return 1.0;
  const ComplexSpectrum c = basis.spectrum(m);
  const auto w = trapezoid_weights(c.values.size(), c.grid.step());
  cd overlap = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) overlap += w[k] * std::conj(target.values[k]) * c.values[k];
  return clamp01(1.0 - std::norm(overlap) / (power * target_power));
}

double cost_target_spectrum(const SuperpositionModes& modes, int ell, const ComplexSpectrum& target,
                            const SpdcConfig& config, const DetuningGrid& grid) {
  return cost_target_spectrum(modes, ModeBasis(config, ell, modes.p_max(), grid), target);
}

double cost_brightness(const SuperpositionModes& modes, const ModeBasis& basis) {
  const Eigen::VectorXcd v = basis.profile(normalized(modes));
  if (!(basis.total_power() > 0.0)) return 1.0;
  return clamp01(1.0 - basis.inner(v, v).real() / basis.total_power());
}

double cost_brightness(const SuperpositionModes& modes, int ell, const SpdcConfig& config, int p_max,
                       const DetuningGrid& grid) {
  if (modes.p_max() != p_max)
    throw Error(ErrorCode::DimensionMismatch, "coefficient arrays do not match p_max");
  return cost_brightness(modes, ModeBasis(config, ell, p_max, grid));
}

double cost_spectral_match(const SuperpositionModes& modes_l, const ModeBasis& basis_l,
                           const SuperpositionModes& modes_lp, const ModeBasis& basis_lp) {
  if (!basis_l.compatible(basis_lp))
    throw Error(ErrorCode::GridMismatch, "spectral match needs bases on a shared grid");
  const Eigen::VectorXcd a = basis_l.profile(normalized(modes_l));
  const Eigen::VectorXcd b = basis_lp.profile(normalized(modes_lp));
  const double pa = basis_l.inner(a, a).real(), pb = basis_l.inner(b, b).real();
  if (!(pa > 0.0) || !(pb > 0.0)) return 1.0;
  return clamp01(1.0 - std::norm(basis_l.inner(a, b)) / (pa * pb));
}

double cost_spectral_match(const SuperpositionModes& modes_l, const SuperpositionModes& modes_lp, int ell,
                           int ell_prime, const SpdcConfig& config, const DetuningGrid& grid) {
  return cost_spectral_match(modes_l, ModeBasis(config, ell, modes_l.p_max(), grid), modes_lp,
                             ModeBasis(config, ell_prime, modes_lp.p_max(), grid));
}

// ---------------------------------------------------------------------------
// Simplex over coefficients

std::vector<double> pack_modes(const SuperpositionModes& modes) {
  if (modes.idler.empty() || modes.idler.size() != modes.signal.size())
    throw Error(ErrorCode::DimensionMismatch, "superposition needs equal, nonempty A and B arrays");
  // Move the phase of A[0] onto B so the product coefficients are unchanged.
  const cd a0 = modes.idler[0];
  const cd rot = std::abs(a0) > 0.0 ? std::conj(a0) / std::abs(a0) : cd(1.0);
  std::vector<double> x;
  x.push_back(std::abs(a0));
  for (std::size_t p = 1; p < modes.idler.size(); ++p) {
    const cd a = modes.idler[p] * rot;
    x.push_back(a.real());
    x.push_back(a.imag());
  }
  for (const cd& b0 : modes.signal) {
    const cd b = b0 / rot;
    x.push_back(b.real());
    x.push_back(b.imag());
  }
  return x;
}

SuperpositionModes unpack_modes(std::span<const double> x, int p_max) {
  const std::size_t n = static_cast<std::size_t>(p_max) + 1;
  if (p_max < 0 || x.size() != 4 * n - 1)
    throw Error(ErrorCode::DimensionMismatch, "parameter vector does not match p_max");
  SuperpositionModes m;
  m.idler.resize(n);
  m.signal.resize(n);
  m.idler[0] = std::abs(x[0]);
  std::size_t k = 1;
  for (std::size_t p = 1; p < n; ++p, k += 2) m.idler[p] = {x[k], x[k + 1]};
  for (std::size_t p = 0; p < n; ++p, k += 2) m.signal[p] = {x[k], x[k + 1]};
  return m;
}

ModeOptimization minimize(const std::function<double(const SuperpositionModes&)>& cost,
                          const SuperpositionModes& start, SimplexOptions options) {
  const int p_max = start.p_max();
  const SuperpositionModes first = normalized(start);
  const CostFunction wrapped = [&](std::span<const double> x) {
    SuperpositionModes m = unpack_modes(x, p_max);
    try {
      m.normalize();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
    return cost(m);
  };
  const SimplexResult r = nelder_mead(wrapped, pack_modes(first), options);
  ModeOptimization out;
  out.modes = normalized(unpack_modes(r.x, p_max));
  out.start_cost = r.start_value;
  out.cost = r.value;
  out.iterations = r.iterations;
  out.evaluations = r.evaluations;
  out.converged = r.converged;
  out.trajectory = r.trajectory;
  return out;
}

double profile_asymmetry(const SuperpositionModes& modes) {
  const SuperpositionModes m = normalized(modes);
  double worst = 0.0;
  for (std::size_t p = 0; p < m.idler.size(); ++p)
    worst = std::max(worst, std::abs(std::abs(m.idler[p]) - std::abs(m.signal[p])));
  return worst;
}

}  // namespace lgspdc
