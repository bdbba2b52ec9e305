#include "lgspdc/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lgspdc/error.hpp"
#include "lgspdc/hypergeometric.hpp"
#include "lgspdc/quadrature.hpp"
#include "lgspdc/units.hpp"

namespace lgspdc {

using cd = std::complex<double>;

namespace {

constexpr double kDetuningLimit = 0.05;  // |Omega| < 0.05 omega_s0
constexpr double kPi = units::pi;

cd integer_power(cd base, int exponent) {
  cd result = 1.0;
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

void require_indices(int p_s, int p_i) {
  if (p_s < 0 || p_i < 0)
    throw Error(ErrorCode::IndexError, "radial indices must be >= 0 (p_s=" + std::to_string(p_s) +
                                           ", p_i=" + std::to_string(p_i) + ")");
}

}  // namespace

// ---------------------------------------------------------------------------
// SpdcConfig

SpdcConfig SpdcConfig::make(CrystalSpec crystal, double pump_wavelength, double pump_waist,
                            double signal_waist, double idler_waist,
                            std::optional<double> signal_wavelength) {
  crystal.validate();
  if (!(pump_wavelength > 0.0)) throw Error(ErrorCode::InvalidArgument, "pump wavelength must be > 0");
  const double lambda_s = signal_wavelength.value_or(2.0 * pump_wavelength);
  if (!(lambda_s > pump_wavelength))
    throw Error(ErrorCode::EnergyMismatch, "signal wavelength must exceed the pump wavelength");
  const double lambda_i = 1.0 / (1.0 / pump_wavelength - 1.0 / lambda_s);
  if (!crystal.poling_period) crystal.poling_period = degenerate_poling_period(crystal, pump_wavelength);

  SpdcConfig config;
  config.crystal = std::move(crystal);
  config.pump = {pump_waist, pump_wavelength};
  config.signal = {signal_waist, lambda_s};
  config.idler = {idler_waist, lambda_i};
  config.pump_wave = wave_params(config.crystal, Role::pump, pump_wavelength);
  config.signal_wave = wave_params(config.crystal, Role::signal, lambda_s);
  config.idler_wave = wave_params(config.crystal, Role::idler, lambda_i);
  config.center_mismatch = phase_mismatch0(config.crystal, pump_wavelength, lambda_s, lambda_i);
  config.validate();
  return config;
}

SpdcConfig SpdcConfig::with_waists(double signal_waist, double idler_waist) const {
  SpdcConfig copy = *this;
  copy.signal.waist = signal_waist;
  copy.idler.waist = idler_waist;
  copy.validate();
  return copy;
}

SpdcConfig SpdcConfig::swapped_roles() const {
  SpdcConfig copy = *this;
  std::swap(copy.signal, copy.idler);
  std::swap(copy.signal_wave, copy.idler_wave);
  std::swap(copy.crystal.roles.signal, copy.crystal.roles.idler);
  return copy;
}

double SpdcConfig::signal_omega0() const { return units::angular_frequency(signal.center_wavelength); }

void SpdcConfig::validate() const {
  if (!(crystal.length > 0.0)) throw Error(ErrorCode::InvalidArgument, "crystal length must be > 0");
  if (!(pump.waist > 0.0) || !(signal.waist > 0.0) || !(idler.waist > 0.0))
    throw Error(ErrorCode::InvalidArgument, "all beam waists must be > 0");
  const double lp = pump.center_wavelength, ls = signal.center_wavelength, li = idler.center_wavelength;
  if (!(lp > 0.0 && ls > 0.0 && li > 0.0))
    throw Error(ErrorCode::InvalidArgument, "centre wavelengths must be > 0");
  const double mismatch = std::abs(1.0 / lp - 1.0 / ls - 1.0 / li) * lp;
  if (mismatch > 1e-9)
    throw Error(ErrorCode::EnergyMismatch,
                "1/lambda_p != 1/lambda_s + 1/lambda_i (relative error " + std::to_string(mismatch) + ")");
  if (z_order < 2 || z_order > 4096)
    throw Error(ErrorCode::InvalidArgument, "z quadrature order must be in [2, 4096]");
}

// ---------------------------------------------------------------------------
// DetuningGrid

DetuningGrid::DetuningGrid(std::vector<double> omega) : omega_(std::move(omega)) {
  const std::size_t n = omega_.size();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "detuning grid needs at least 3 points");
  const double h = omega_[1] - omega_[0];
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidArgument, "detuning grid must be strictly increasing");
  for (std::size_t k = 1; k < n; ++k) {
    const double dk = omega_[k] - omega_[k - 1];
    if (!(dk > 0.0) || std::abs(dk - h) > 1e-6 * h)
      throw Error(ErrorCode::InvalidArgument, "detuning grid must be uniform and strictly increasing");
  }
  for (std::size_t k = 0; k < n / 2; ++k)
    if (std::abs(omega_[k] + omega_[n - 1 - k]) > 1e-6 * h)
      throw Error(ErrorCode::InvalidArgument, "detuning grid must be symmetric about 0");
}

DetuningGrid DetuningGrid::uniform(std::size_t count, double omega_max) {
  if (count < 3) throw Error(ErrorCode::InvalidArgument, "detuning grid needs at least 3 points");
  if (!(omega_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "detuning span must be > 0");
  std::vector<double> omega(count);
  const double mid = 0.5 * static_cast<double>(count - 1);
  const double h = omega_max / mid;
  for (std::size_t k = 0; k < count; ++k) omega[k] = (static_cast<double>(k) - mid) * h;
  return DetuningGrid(std::move(omega));
}

DetuningGrid DetuningGrid::from_wavelength_span(double center_wavelength, double half_span,
                                                std::size_t count) {
  if (!(half_span > 0.0) || !(half_span < center_wavelength))
    throw Error(ErrorCode::InvalidArgument, "wavelength half-span must be in (0, centre)");
  const double w0 = units::angular_frequency(center_wavelength);
  const double blue = units::angular_frequency(center_wavelength - half_span) - w0;
  const double red = w0 - units::angular_frequency(center_wavelength + half_span);
  return uniform(count, std::max(blue, red));
}

// ---------------------------------------------------------------------------
// ComplexSpectrum

double ComplexSpectrum::norm2() const {
  std::vector<double> abs2(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) abs2[k] = std::norm(values[k]);
  return trapezoid(abs2, grid.step());
}

void ComplexSpectrum::normalize() {
  const double n2 = norm2();
  if (!(n2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "cannot normalize an all-zero spectrum");
  const double scale = 1.0 / std::sqrt(n2);
  for (auto& v : values) v *= scale;
  normalization = Normalization::unit_l2;
}

// ---------------------------------------------------------------------------
// Closed-form amplitude

LongitudinalProfile longitudinal_profile(const SpdcConfig& config, int p_s, int p_i, int ell) {
  require_indices(p_s, p_i);
  const int nu = std::abs(ell);
  const double kp = config.pump_wave.k0, ks = config.signal_wave.k0, ki = config.idler_wave.k0;
  const double wp = config.pump.waist, ws = config.signal.waist, wi = config.idler.waist;
  const double half = 0.5 * config.crystal.length;
  const QuadratureRule rule = gauss_legendre(config.z_order, -half, half);

  std::vector<double> ts(p_s + 1), ti(p_i + 1);
  for (int s = 0; s <= p_s; ++s) ts[s] = t_coefficient(s, p_s, nu, ws);
  for (int i = 0; i <= p_i; ++i) ti[i] = t_coefficient(i, p_i, nu, wi);
  const double prefactor = wp / std::sqrt(2.0);

  const double h0 = 0.25 * (wp * wp + ws * ws), b0 = 0.25 * (wp * wp + wi * wi);
  const double hz = (kp - ks) / (2.0 * kp * ks), bz = (kp - ki) / (2.0 * kp * ki);

  LongitudinalProfile profile;
  profile.z = rule.nodes;
  profile.values.resize(rule.nodes.size());
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
    const double z = rule.nodes[k];
    const cd D(-0.25 * wp * wp, -z / (2.0 * kp));
    const cd H(h0, -z * hz);
    const cd B(b0, -z * bz);
    const cd inv_d_pow = integer_power(1.0 / D, nu);
    const cd x = D * D / (H * B);
    const cd inv_h = 1.0 / H, inv_b = 1.0 / B;
    cd sum = 0.0;
    cd h_pow = inv_h;  // H^-(1+s)
    for (int s = 0; s <= p_s; ++s, h_pow *= inv_h) {
      cd b_pow = inv_b;  // B^-(1+i)
      for (int i = 0; i <= p_i; ++i, b_pow *= inv_b)
        sum += ts[s] * ti[i] * h_pow * b_pow * hyp2f1_regularized(1 + s, 1 + i, 1 - nu, x);
    }
    profile.values[k] = rule.weights[k] * prefactor * inv_d_pow * sum;
  }
  return profile;
}

double longitudinal_phase_rate(const SpdcConfig& config, double omega) {
  return omega / config.idler_wave.u0 - omega / config.signal_wave.u0 -
         0.5 * omega * omega * (config.idler_wave.G0 + config.signal_wave.G0) +
         config.total_mismatch();
}

cd evaluate_profile(const LongitudinalProfile& profile, double phase_rate) {
  cd sum = 0.0;
  for (std::size_t k = 0; k < profile.z.size(); ++k)
    sum += profile.values[k] * std::polar(1.0, profile.z[k] * phase_rate);
  return sum;
}

namespace {

void check_omega(const SpdcConfig& config, double omega) {
  if (!(std::abs(omega) < kDetuningLimit * config.signal_omega0()))
    throw Error(ErrorCode::DetuningOutOfRange,
                "detuning " + std::to_string(omega) + " rad/s outside the small-detuning window");
}

}  // namespace

void check_detuning(const SpdcConfig& config, const DetuningGrid& grid) {
  if (grid.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty detuning grid");
  check_omega(config, grid.front());
  check_omega(config, grid.back());
}

cd mode_amplitude(const SpdcConfig& config, int p_s, int p_i, int ell, double omega) {
  check_omega(config, omega);
  return evaluate_profile(longitudinal_profile(config, p_s, p_i, ell),
                          longitudinal_phase_rate(config, omega));
}

ComplexSpectrum spectrum(const SpdcConfig& config, int p_s, int p_i, int ell, const DetuningGrid& grid,
                         bool normalize) {
  check_detuning(config, grid);
  const LongitudinalProfile profile = longitudinal_profile(config, p_s, p_i, ell);
  ComplexSpectrum out;
  out.grid = grid;
  out.p_s = p_s;
  out.p_i = p_i;
  out.ell = ell;
  out.values.resize(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    out.values[k] = evaluate_profile(profile, longitudinal_phase_rate(config, grid.omega()[k]));
  if (normalize) out.normalize();
  return out;
}

SuperpositionModes SuperpositionModes::uniform(int p_max) {
  if (p_max < 0) throw Error(ErrorCode::IndexError, "p_max must be >= 0");
  const double v = 1.0 / std::sqrt(static_cast<double>(p_max + 1));
  return {std::vector<cd>(p_max + 1, v), std::vector<cd>(p_max + 1, v)};
}

void SuperpositionModes::normalize() {
  if (idler.empty() || idler.size() != signal.size())
    throw Error(ErrorCode::DimensionMismatch, "superposition needs equal, nonempty A and B arrays");
  for (auto* side : {&idler, &signal}) {
    double n2 = 0.0;
    for (const auto& c : *side) n2 += std::norm(c);
    if (!(n2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "superposition coefficients are all zero");
    const double scale = 1.0 / std::sqrt(n2);
    for (auto& c : *side) c *= scale;
  }
}

ComplexSpectrum superposition_spectrum(const SpdcConfig& config, int ell, const SuperpositionModes& modes,
                                       const DetuningGrid& grid) {
  if (modes.idler.empty() || modes.idler.size() != modes.signal.size())
    throw Error(ErrorCode::DimensionMismatch, "superposition needs equal, nonempty A and B arrays");
  check_detuning(config, grid);
  const int pm = modes.p_max();
  LongitudinalProfile combined;
  for (int pi = 0; pi <= pm; ++pi)
    for (int ps = 0; ps <= pm; ++ps) {
      const cd w = modes.idler[pi] * modes.signal[ps];
      if (w == 0.0) continue;
      const LongitudinalProfile part = longitudinal_profile(config, ps, pi, ell);
      if (combined.z.empty()) {
        combined.z = part.z;
        combined.values.assign(part.values.size(), 0.0);
      }
      for (std::size_t k = 0; k < part.values.size(); ++k) combined.values[k] += w * part.values[k];
    }
  ComplexSpectrum out;
  out.grid = grid;
  out.ell = ell;
  out.values.assign(grid.size(), 0.0);
  if (combined.z.empty()) return out;
  for (std::size_t k = 0; k < grid.size(); ++k)
    out.values[k] = evaluate_profile(combined, longitudinal_phase_rate(config, grid.omega()[k]));
  return out;
}

double peak_detuning(const ComplexSpectrum& spectrum) {
  const auto& v = spectrum.values;
  if (v.size() < 3 || v.size() != spectrum.grid.size())
    throw Error(ErrorCode::GridMismatch, "spectrum and grid sizes differ");
  std::size_t k = 0;
  for (std::size_t j = 1; j < v.size(); ++j)
    if (std::norm(v[j]) > std::norm(v[k])) k = j;
  const double x = spectrum.grid.omega()[k];
  if (k == 0 || k + 1 == v.size()) return x;
  const double a = std::norm(v[k - 1]), b = std::norm(v[k]), c = std::norm(v[k + 1]);
  const double denom = a - 2.0 * b + c;
  if (denom >= 0.0) return x;
  return x + 0.5 * (a - c) / denom * spectrum.grid.step();
}

double spectral_centroid(const ComplexSpectrum& spectrum) {
  std::vector<double> w(spectrum.values.size()), wx(spectrum.values.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = std::norm(spectrum.values[k]);
    wx[k] = w[k] * spectrum.grid.omega()[k];
  }
  const double h = spectrum.grid.step();
  const double total = trapezoid(w, h);
  if (!(total > 0.0)) throw Error(ErrorCode::InvalidArgument, "centroid of an all-zero spectrum");
  return trapezoid(wx, h) / total;
}

double residual_mismatch_for_peak(const SpdcConfig& config, int p_s, int p_i, int ell,
                                  double target_signal_wavelength, const DetuningGrid& grid) {
  const double target = units::angular_frequency(target_signal_wavelength) - config.signal_omega0();
  const double kappa = 1.0 / config.idler_wave.u0 - 1.0 / config.signal_wave.u0;
  if (kappa == 0.0) throw Error(ErrorCode::NoRoot, "group velocities are equal; the peak cannot be moved");
  SpdcConfig local = config;
  for (int it = 0; it < 6; ++it) {
    const double peak = peak_detuning(spectrum(local, p_s, p_i, ell, grid));
    if (std::abs(peak - target) < 1e-6 * grid.step()) break;
    local.residual_mismatch += kappa * (peak - target);
  }
  return local.residual_mismatch;
}

double tail_fraction(std::span<const double> abs2, double step) {
  const std::size_t n = abs2.size();
  const double total = trapezoid(abs2, step);
  if (!(total > 0.0)) return 0.0;
  const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * n)));
  double tail = 0.0;
  for (std::size_t k = 0; k < m && k < n; ++k) tail += abs2[k] + abs2[n - 1 - k];
  return tail * step / total;
}

double collection_probability(const SpdcConfig& config, int p_s, int p_i, int ell,
                              const DetuningGrid& grid, ProbabilityOptions options) {
  const ComplexSpectrum spec = spectrum(config, p_s, p_i, ell, grid);
  std::vector<double> abs2(spec.values.size());
  for (std::size_t k = 0; k < abs2.size(); ++k) abs2[k] = std::norm(spec.values[k]);
  const double tail = tail_fraction(abs2, grid.step());
  if (tail > options.tail_threshold)
    throw Error(ErrorCode::GridTooNarrow, "outer 5% of the grid carries " + std::to_string(tail) +
                                              " of the spectral weight (limit " +
                                              std::to_string(options.tail_threshold) + ")");
  return trapezoid(abs2, grid.step());
}

// ---------------------------------------------------------------------------
// Quadrature oracle

namespace {

// Closed form = full overlap / pi^{3/2} (pump normalised as w_p / sqrt(2 pi)).
const double kOracleScale = 1.0 / std::pow(kPi, 1.5);

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

struct RadialSamples {
  QuadratureRule rule;
  std::vector<double> amplitude;  // rho * w_rho * R(rho)
};

RadialSamples radial_samples(LGIndex mode, double waist, const QuadratureSpec& spec) {
  RadialSamples out;
  out.rule = gauss_legendre(spec.radial_nodes, 0.0, spec.radial_extent / waist);
  out.amplitude.resize(out.rule.nodes.size());
  for (std::size_t k = 0; k < out.rule.nodes.size(); ++k) {
    const double rho = out.rule.nodes[k];
    out.amplitude[k] = rho * out.rule.weights[k] * lg_radial(mode, waist, rho);
  }
  return out;
}

void check_budget(long long nodes, const QuadratureSpec& spec) {
  if (spec.radial_nodes < 2 || spec.angular_nodes < 4)
    throw Error(ErrorCode::InvalidArgument, "oracle quadrature needs >= 2 radial and >= 4 angular nodes");
  if (nodes > spec.max_nodes)
    throw Error(ErrorCode::BudgetExceeded, "oracle needs " + std::to_string(nodes) + " nodes (limit " +
                                               std::to_string(spec.max_nodes) + ")");
}

}  // namespace

cd oracle_amplitude(const SpdcConfig& config, int p_s, int p_i, int ell, double omega,
                    QuadratureSpec spec) {
  require_indices(p_s, p_i);
  if (p_s > 3 || p_i > 3 || std::abs(ell) > 4)
    throw Error(ErrorCode::BudgetExceeded, "oracle limited to p <= 3 and |l| <= 4");
  const long long nodes = 1LL * spec.radial_nodes * spec.radial_nodes * spec.angular_nodes;
  check_budget(nodes, spec);
  check_omega(config, omega);

  const RadialSamples rs = radial_samples({p_s, ell}, config.signal.waist, spec);
  const RadialSamples ri = radial_samples({p_i, -ell}, config.idler.waist, spec);
  const double kp = config.pump_wave.k0, ks = config.signal_wave.k0, ki = config.idler_wave.k0;
  const double wp2 = config.pump.waist * config.pump.waist;
  const double length = config.crystal.length;
  const double phi = longitudinal_phase_rate(config, omega);

  const int na = spec.angular_nodes;
  const double dtheta = 2.0 * kPi / na;
  std::vector<double> cos_t(na), cos_lt(na);
  for (int j = 0; j < na; ++j) {
    cos_t[j] = std::cos(j * dtheta);
    cos_lt[j] = std::cos(ell * j * dtheta);  // e^{-il theta} pairs with its mirror image
  }

  double total = 0.0;
  for (std::size_t a = 0; a < rs.rule.nodes.size(); ++a) {
    const double rho_s = rs.rule.nodes[a];
    for (std::size_t b = 0; b < ri.rule.nodes.size(); ++b) {
      const double rho_i = ri.rule.nodes[b];
      const double radial = rs.amplitude[a] * ri.amplitude[b];
      const double sum2 = rho_s * rho_s + rho_i * rho_i;
      const double base = phi + rho_s * rho_s / (2.0 * ks) + rho_i * rho_i / (2.0 * ki) - sum2 / (2.0 * kp);
      const double cross = rho_s * rho_i;
      double angular = 0.0;
      for (int j = 0; j < na; ++j) {
        const double q2 = sum2 + 2.0 * cross * cos_t[j];
        const double dk = base - cross * cos_t[j] / kp;
        angular += cos_lt[j] * std::exp(-0.25 * wp2 * q2) * sinc(0.5 * dk * length);
      }
      total += radial * angular;
    }
  }
  const double pump_norm = config.pump.waist / std::sqrt(2.0 * kPi);
  // 2 pi from the free overall angle, dtheta from the relative one.
  return 2.0 * kPi * dtheta * pump_norm * length * total * kOracleScale;
}

cd oracle_amplitude_full(const SpdcConfig& config, LGIndex signal, LGIndex idler, double omega,
                         QuadratureSpec spec) {
  require_indices(signal.p, idler.p);
  if (signal.p > 3 || idler.p > 3 || std::abs(signal.ell) > 4 || std::abs(idler.ell) > 4)
    throw Error(ErrorCode::BudgetExceeded, "oracle limited to p <= 3 and |l| <= 4");
  const long long na = spec.angular_nodes;
  const long long nodes = 1LL * spec.radial_nodes * spec.radial_nodes * na * na;
  check_budget(nodes, spec);
  check_omega(config, omega);

  const RadialSamples rs = radial_samples(signal, config.signal.waist, spec);
  const RadialSamples ri = radial_samples(idler, config.idler.waist, spec);
  const double kp = config.pump_wave.k0, ks = config.signal_wave.k0, ki = config.idler_wave.k0;
  const double wp2 = config.pump.waist * config.pump.waist;
  const double length = config.crystal.length;
  const double phi = longitudinal_phase_rate(config, omega);
  const double dphi = 2.0 * kPi / static_cast<double>(na);

  std::vector<double> cx(na), sy(na);
  std::vector<cd> phase_s(na), phase_i(na);
  for (long long j = 0; j < na; ++j) {
    cx[j] = std::cos(j * dphi);
    sy[j] = std::sin(j * dphi);
    phase_s[j] = std::polar(1.0, -signal.ell * j * dphi);  // conj(LG_s)
    phase_i[j] = std::polar(1.0, -idler.ell * j * dphi);   // conj(LG_i)
  }

  cd total = 0.0;
  for (std::size_t a = 0; a < rs.rule.nodes.size(); ++a) {
    const double rho_s = rs.rule.nodes[a];
    for (std::size_t b = 0; b < ri.rule.nodes.size(); ++b) {
      const double rho_i = ri.rule.nodes[b];
      const double base = phi + rho_s * rho_s / (2.0 * ks) + rho_i * rho_i / (2.0 * ki);
      cd inner = 0.0;
      for (long long js = 0; js < na; ++js) {
        const double qsx = rho_s * cx[js], qsy = rho_s * sy[js];
        cd row = 0.0;
        for (long long ji = 0; ji < na; ++ji) {
          const double px = qsx + rho_i * cx[ji], py = qsy + rho_i * sy[ji];
          const double q2 = px * px + py * py;
          const double dk = base - q2 / (2.0 * kp);
          row += phase_i[ji] * (std::exp(-0.25 * wp2 * q2) * sinc(0.5 * dk * length));
        }
        inner += phase_s[js] * row;
      }
      total += rs.amplitude[a] * ri.amplitude[b] * inner;
    }
  }
  const double pump_norm = config.pump.waist / std::sqrt(2.0 * kPi);
  return dphi * dphi * pump_norm * length * total * kOracleScale;
}

}  // namespace lgspdc
