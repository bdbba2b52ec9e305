#include "lgspdc/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "lgspdc/error.hpp"

namespace lgspdc {

using cd = std::complex<double>;

namespace {

constexpr int kSettings = 36;
constexpr std::array<std::pair<int, int>, 6> kLower{{{1, 0}, {2, 0}, {2, 1}, {3, 0}, {3, 1}, {3, 2}}};

Eigen::Matrix4cd reversal() { return Eigen::Matrix4cd::Identity().rowwise().reverse(); }

Eigen::Matrix4cd psd_project(const Eigen::Matrix4cd& m) {
  const Eigen::Matrix4cd herm = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(herm);
  Eigen::Vector4d lambda = eig.eigenvalues().cwiseMax(0.0);
  const double sum = lambda.sum();
  if (!(sum > 0.0)) return Eigen::Matrix4cd::Identity() / 4.0;
  lambda /= sum;
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().adjoint();
}

std::vector<double> born_probabilities(const Eigen::Matrix4cd& rho, const ProjectorSet& set) {
  std::vector<double> p(set.projectors.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const auto& v = set.projectors[j].vector;
    p[j] = std::max(0.0, (v.adjoint() * rho * v)(0, 0).real());
  }
  return p;
}

double efficiency_of(const TomographyRun& run, std::size_t j) {
  return run.efficiency.empty() ? 1.0 : run.efficiency[j];
}

}  // namespace

std::string_view to_string(ProbeState state) {
  switch (state) {
    case ProbeState::l: return "l";
    case ProbeState::lt: return "lt";
    case ProbeState::l_plus_lt: return "l+lt";
    case ProbeState::l_minus_lt: return "l-lt";
    case ProbeState::l_plus_i_lt: return "l+ilt";
    case ProbeState::l_minus_i_lt: return "l-ilt";
  }
  return "?";
}

ProbeState parse_probe_state(std::string_view text) {
  for (ProbeState s : kProbeStates)
    if (to_string(s) == text) return s;
  throw Error(ErrorCode::ParseError, "unknown probe state '" + std::string(text) + "'");
}

Eigen::Vector2cd probe_vector(ProbeState state) {
  const double r = 1.0 / std::sqrt(2.0);
  const cd i(0.0, 1.0);
  switch (state) {
    case ProbeState::l: return {1.0, 0.0};
    case ProbeState::lt: return {0.0, 1.0};
    case ProbeState::l_plus_lt: return {r, r};
    case ProbeState::l_minus_lt: return {r, -r};
    case ProbeState::l_plus_i_lt: return {r, i * r};
    case ProbeState::l_minus_i_lt: return {r, -i * r};
  }
  return {1.0, 0.0};
}

ProjectorSet projector_set(int ell, int ell_tilde) {
  if (ell == ell_tilde) throw Error(ErrorCode::DegenerateSubspace, "tomography subspace needs l != lt");
  ProjectorSet set;
  set.ell = ell;
  set.ell_tilde = ell_tilde;
  for (int s = 0; s < 6; ++s)
    for (int i = 0; i < 6; ++i) {
      Projector p;
      p.setting_index = 6 * s + i;
      p.signal = kProbeStates[s];
      p.idler = kProbeStates[i];
      const Eigen::Vector2cd a = probe_vector(p.signal), b = probe_vector(p.idler);
      p.vector << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
      set.projectors.push_back(p);
    }
  return set;
}

Eigen::Matrix4cd embed(const Eigen::MatrixXcd& rho_spatial) {
  if (rho_spatial.rows() != 2 || rho_spatial.cols() != 2)
    throw Error(ErrorCode::DimensionMismatch, "embedding needs a 2x2 spatial density matrix");
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  out(0, 0) = rho_spatial(0, 0);
  out(0, 3) = rho_spatial(0, 1);
  out(3, 0) = rho_spatial(1, 0);
  out(3, 3) = rho_spatial(1, 1);
  return out;
}

Eigen::Matrix4cd embedded_target(double phase) {
  Eigen::Matrix2cd t;
  const cd e = std::polar(1.0, phase);
  t << 0.5, 0.5 * std::conj(e), 0.5 * e, 0.5;
  return embed(t);
}

void TomographyRun::validate() const {
  if (projectors.projectors.size() != kSettings || counts.size() != kSettings)
    throw Error(ErrorCode::DimensionMismatch, "a tomography run needs exactly 36 settings");
  for (auto n : counts)
    if (n < 0) throw Error(ErrorCode::InvalidArgument, "counts must be nonnegative");
  if (!efficiency.empty()) {
    if (efficiency.size() != kSettings)
      throw Error(ErrorCode::DimensionMismatch, "efficiency weights need 36 entries");
    for (double e : efficiency)
      if (!(e > 0.0)) throw Error(ErrorCode::InvalidArgument, "efficiency weights must be > 0");
  }
}

TomographyRun simulate_counts(const Eigen::Matrix4cd& rho, const ProjectorSet& projectors, std::int64_t total_counts,
                              std::optional<std::uint64_t> seed, std::span<const double> efficiency) {
  if (total_counts <= 0) throw Error(ErrorCode::InvalidArgument, "total_counts must be > 0");
  TomographyRun run;
  run.projectors = projectors;
  run.total_counts = total_counts;
  run.seed = seed;
  run.efficiency.assign(efficiency.begin(), efficiency.end());
  run.counts.assign(projectors.projectors.size(), 0);
  run.validate();

  std::vector<double> q = born_probabilities(rho, projectors);
  for (std::size_t j = 0; j < q.size(); ++j) q[j] *= efficiency_of(run, j);
  double sum = 0.0;
  for (double v : q) sum += v;
  if (!(sum > 0.0)) throw Error(ErrorCode::InvalidArgument, "state has no overlap with any projector");

  std::mt19937_64 rng(seed.value_or(0));
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double mean = static_cast<double>(total_counts) * q[j] / sum;
    if (!seed) {
      run.counts[j] = std::llround(mean);
    } else if (mean > 0.0) {
      std::poisson_distribution<std::int64_t> draw(mean);
      run.counts[j] = draw(rng);
    }
  }
  return run;
}

double poisson_log_likelihood(const TomographyRun& run, const Eigen::Matrix4cd& rho) {
  const std::vector<double> p = born_probabilities(rho, run.projectors);
  double n_total = 0.0, q_total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    n_total += static_cast<double>(run.counts[j]);
    q_total += efficiency_of(run, j) * p[j];
  }
  if (!(q_total > 0.0)) return -std::numeric_limits<double>::infinity();
  const double scale = n_total / q_total;
  double ll = -n_total;  // sum of mu at the optimal scale
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double n = static_cast<double>(run.counts[j]);
    if (n == 0.0) continue;
    ll += n * std::log(std::max(scale * efficiency_of(run, j) * p[j], 1e-300));
  }
  return ll;
}

Eigen::Matrix4cd rho_from_parameters(std::span<const double> t) {
  if (t.size() != 16) throw Error(ErrorCode::DimensionMismatch, "T parameterization needs 16 reals");
  Eigen::Matrix4cd T = Eigen::Matrix4cd::Zero();
  for (int k = 0; k < 4; ++k) T(k, k) = t[k];
  for (std::size_t k = 0; k < kLower.size(); ++k) T(kLower[k].first, kLower[k].second) = {t[4 + 2 * k], t[5 + 2 * k]};
  const Eigen::Matrix4cd rho = T.adjoint() * T;
  const double trace = rho.trace().real();
  if (!(trace > 0.0)) return Eigen::Matrix4cd::Identity() / 4.0;
  return rho / trace;
}

std::vector<double> parameters_from_rho(const Eigen::Matrix4cd& rho) {
  // rho = T^dagger T with T lower-triangular: Cholesky of the index-reversed
  // matrix, J rho J = L L^dagger, gives T = J L^dagger J.
  const Eigen::Matrix4cd J = reversal();
  const Eigen::Matrix4cd reg = psd_project(rho) + 1e-10 * Eigen::Matrix4cd::Identity();
  Eigen::LLT<Eigen::Matrix4cd> llt(J * reg * J);
  const Eigen::Matrix4cd L = llt.matrixL();
  const Eigen::Matrix4cd T = J * L.adjoint() * J;
  std::vector<double> t(16);
  for (int k = 0; k < 4; ++k) t[k] = T(k, k).real();
  for (std::size_t k = 0; k < kLower.size(); ++k) {
    const cd v = T(kLower[k].first, kLower[k].second);
    t[4 + 2 * k] = v.real();
    t[5 + 2 * k] = v.imag();
  }
  return t;
}

Eigen::Matrix4cd linear_inversion(const TomographyRun& run) {
  run.validate();
  // Hermitian basis: 4 diagonal units, then symmetric and antisymmetric pairs.
  std::vector<Eigen::Matrix4cd> basis;
  for (int k = 0; k < 4; ++k) {
    Eigen::Matrix4cd e = Eigen::Matrix4cd::Zero();
    e(k, k) = 1.0;
    basis.push_back(e);
  }
  for (int r = 0; r < 4; ++r)
    for (int c = r + 1; c < 4; ++c) {
      Eigen::Matrix4cd s = Eigen::Matrix4cd::Zero(), a = Eigen::Matrix4cd::Zero();
      s(r, c) = s(c, r) = 1.0;
      a(r, c) = cd(0.0, -1.0);
      a(c, r) = cd(0.0, 1.0);
      basis.push_back(s);
      basis.push_back(a);
    }
  const auto& projectors = run.projectors.projectors;
  Eigen::MatrixXd M(kSettings, 16);
  Eigen::VectorXd f(kSettings);
  double total = 0.0;
  for (int j = 0; j < kSettings; ++j) {
    f(j) = static_cast<double>(run.counts[j]) / efficiency_of(run, j);
    total += f(j);
    for (int a = 0; a < 16; ++a)
      M(j, a) = (projectors[j].vector.adjoint() * basis[a] * projectors[j].vector)(0, 0).real();
  }
  if (!(total > 0.0)) return Eigen::Matrix4cd::Identity() / 4.0;
  f *= 9.0 / total;  // nine complete basis pairs, each summing to Tr(rho) = 1
  const Eigen::VectorXd c = M.colPivHouseholderQr().solve(f);
  Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 16; ++a) rho += c(a) * basis[a];
  return psd_project(rho);
}

MleResult mle_reconstruct(const TomographyRun& run, MleOptions options) {
  run.validate();
  double n_total = 0.0;
  for (auto n : run.counts) n_total += static_cast<double>(n);
  if (!(n_total > 0.0)) throw Error(ErrorCode::InvalidArgument, "tomography run has no counts");

  const CostFunction cost = [&](std::span<const double> t) {
    return -poisson_log_likelihood(run, rho_from_parameters(t)) / n_total;
  };
  std::vector<double> mixed(16, 0.0);
  for (int k = 0; k < 4; ++k) mixed[k] = 0.5;

  SimplexResult best = nelder_mead(cost, mixed, options.simplex);
  MleResult out;
  out.iterations = best.iterations;
  if (!best.converged) {
    const SimplexResult second = nelder_mead(cost, parameters_from_rho(linear_inversion(run)), options.simplex);
    out.restarted = true;
    out.iterations += second.iterations;
    if (second.value < best.value || second.converged) {
      if (second.value <= best.value) best = second;
      best.converged = second.converged;
    }
  }
  out.rho = rho_from_parameters(best.x);
  out.rho = 0.5 * (out.rho + out.rho.adjoint());
  out.log_likelihood = poisson_log_likelihood(run, out.rho);
  out.converged = best.converged;
  return out;
}

double visibility(const Eigen::MatrixXd& crosstalk) {
  if (crosstalk.size() == 0) throw Error(ErrorCode::EmptyMatrix, "visibility of an empty matrix");
  if (crosstalk.rows() != crosstalk.cols())
    throw Error(ErrorCode::DimensionMismatch, "crosstalk matrix must be square");
  if ((crosstalk.array() < 0.0).any() || !crosstalk.allFinite())
    throw Error(ErrorCode::InvalidArgument, "crosstalk entries must be finite and nonnegative");
  const double total = crosstalk.sum();
  if (!(total > 0.0)) throw Error(ErrorCode::EmptyMatrix, "crosstalk matrix is all zero");
  return crosstalk.diagonal().sum() / total;
}

double trace_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
    throw Error(ErrorCode::DimensionMismatch, "trace distance needs square matrices of equal size");
  const Eigen::MatrixXcd d = a - b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(0.5 * (d + d.adjoint()), Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

void write_counts_csv(std::ostream& out, const TomographyRun& run) {
  run.validate();
  out << "setting_index,signal_state,idler_state,counts\n";
  for (std::size_t j = 0; j < run.counts.size(); ++j) {
    const auto& p = run.projectors.projectors[j];
    out << p.setting_index << ',' << to_string(p.signal) << ',' << to_string(p.idler) << ',' << run.counts[j]
        << '\n';
  }
}

TomographyRun read_counts_csv(std::istream& in, int ell, int ell_tilde) {
  TomographyRun run;
  run.projectors = projector_set(ell, ell_tilde);
  run.counts.assign(kSettings, -1);
  std::string line;
  int row = 0;
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::ParseError, "counts file row " + std::to_string(row) + ": " + what);
  };
  if (!std::getline(in, line)) fail("missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "setting_index,signal_state,idler_state,counts")
    fail("header must be 'setting_index,signal_state,idler_state,counts'");
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 4) fail("expected 4 comma-separated fields");
    std::size_t used = 0;
    long long index = 0, count = 0;
    try {
      index = std::stoll(fields[0], &used);
      if (used != fields[0].size()) throw std::invalid_argument("trailing");
      count = std::stoll(fields[3], &used);
      if (used != fields[3].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      fail("setting_index and counts must be integers");
    }
    if (index < 0 || index >= kSettings) fail("setting_index outside [0, 35]");
    if (count < 0) fail("counts must be nonnegative");
    const auto& p = run.projectors.projectors[static_cast<std::size_t>(index)];
    ProbeState s{}, i{};
    try {
      s = parse_probe_state(fields[1]);
      i = parse_probe_state(fields[2]);
    } catch (const Error&) {
      fail("unknown state label");
    }
    if (s != p.signal || i != p.idler) fail("state labels do not match setting_index");
    if (run.counts[static_cast<std::size_t>(index)] >= 0) fail("duplicate setting_index");
    run.counts[static_cast<std::size_t>(index)] = count;
    run.total_counts += count;
  }
  for (auto c : run.counts)
    if (c < 0) {
      row = 0;
      fail("missing settings: the file must list all 36");
    }
  return run;
}

}  // namespace lgspdc
