#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lgspdc/error.hpp"
#include "lgspdc/state.hpp"
#include "lgspdc/tomography.hpp"

using namespace lgspdc;
using cd = std::complex<double>;

namespace {

constexpr std::int64_t kPerSetting = 10'000;  // counts per basis pair
constexpr std::int64_t kTotal = 9 * kPerSetting;

Eigen::Matrix4cd random_state(std::mt19937_64& rng, int rank = 4) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXcd g(4, rank);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < rank; ++j) g(i, j) = cd(n01(rng), n01(rng));
  Eigen::Matrix4cd rho = g * g.adjoint();
  return rho / rho.trace().real();
}

int basis_of(ProbeState s) { return static_cast<int>(s) / 2; }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return 0.5 * (v[(v.size() - 1) / 2] + v[v.size() / 2]);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an lgspdc::Error");
  return ErrorCode::ParseError;
}

std::string counts_text(const TomographyRun& run) {
  std::ostringstream out;
  write_counts_csv(out, run);
  return out.str();
}

}  // namespace

TEST_CASE("projectors are idempotent and each photon sees three complete bases") {
  const ProjectorSet set = projector_set(1, 2);
  REQUIRE(set.projectors.size() == 36);
  for (const auto& p : set.projectors) {
    const Eigen::Matrix4cd m = p.matrix();
    CHECK((m * m - m).norm() < 1e-12);
    CHECK(p.setting_index == 6 * static_cast<int>(p.signal) + static_cast<int>(p.idler));
  }
  Eigen::Matrix2cd sum = Eigen::Matrix2cd::Zero();
  for (ProbeState s : kProbeStates) sum += probe_vector(s) * probe_vector(s).adjoint();
  CHECK((sum - 3.0 * Eigen::Matrix2cd::Identity()).norm() < 1e-12);
}

TEST_CASE("swapping the two orders permutes the projector set") {
  const ProjectorSet a = projector_set(1, 4), b = projector_set(4, 1);
  Eigen::Matrix4cd swap = Eigen::Matrix4cd::Zero();
  swap(0, 3) = swap(1, 2) = swap(2, 1) = swap(3, 0) = 1.0;
  for (const auto& p : a.projectors) {
    const Eigen::Matrix4cd relabelled = swap * p.matrix() * swap;
    const bool found = std::any_of(b.projectors.begin(), b.projectors.end(),
                                   [&](const Projector& q) { return (q.matrix() - relabelled).norm() < 1e-12; });
    CHECK(found);
  }
}

TEST_CASE("Born probabilities sum to one within each basis pair") {
  std::mt19937_64 rng(1);
  const ProjectorSet set = projector_set(1, 2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix4cd rho = random_state(rng);
    double sums[3][3] = {};
    for (const auto& p : set.projectors)
      sums[basis_of(p.signal)][basis_of(p.idler)] += (p.matrix() * rho).trace().real();
    for (auto& row : sums)
      for (double s : row) CHECK(std::abs(s - 1.0) < 1e-12);
  }
}

TEST_CASE("noiseless counts follow the Born rule") {
  const ProjectorSet set = projector_set(1, 2);
  const TomographyRun mixed = simulate_counts(Eigen::Matrix4cd::Identity() / 4.0, set, kTotal);
  const auto [lo, hi] = std::minmax_element(mixed.counts.begin(), mixed.counts.end());
  CHECK(*hi - *lo <= 1);
  CHECK(*lo >= kPerSetting / 4 - 1);

  const Eigen::Matrix4cd bell = embedded_target(0.0);
  const TomographyRun run = simulate_counts(bell, set, kTotal);
  // Outcome (l+lt) x (l+lt) within its basis pair.
  std::int64_t hit = 0, pair_total = 0;
  for (std::size_t j = 0; j < run.counts.size(); ++j) {
    const auto& p = run.projectors.projectors[j];
    if (basis_of(p.signal) == 1 && basis_of(p.idler) == 1) pair_total += run.counts[j];
    if (p.signal == ProbeState::l_plus_lt && p.idler == ProbeState::l_plus_lt) hit = run.counts[j];
  }
  CHECK(static_cast<double>(hit) / static_cast<double>(pair_total) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("seeded counts are reproducible") {
  const ProjectorSet set = projector_set(1, 2);
  const Eigen::Matrix4cd bell = embedded_target(0.0);
  CHECK(simulate_counts(bell, set, kTotal, 42).counts == simulate_counts(bell, set, kTotal, 42).counts);
  CHECK(simulate_counts(bell, set, kTotal, 42).counts != simulate_counts(bell, set, kTotal, 43).counts);
}

TEST_CASE("parameterization round trip") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 20; ++k) {
    const Eigen::Matrix4cd rho = random_state(rng, k % 4 + 1);
    CHECK((rho_from_parameters(parameters_from_rho(rho)) - rho).norm() < 1e-9);
  }
}

TEST_CASE("noiseless round trip recovers the state") {
  const ProjectorSet set = projector_set(1, 2);
  const Eigen::Matrix4cd bell = embedded_target(0.0);
  const TomographyRun run = simulate_counts(bell, set, 9'000'000'000LL);
  CHECK(trace_distance(mle_reconstruct(run).rho, bell) < 1e-3);
  CHECK(trace_distance(linear_inversion(run), bell) < 1e-3);
}

TEST_CASE("reconstruction is PSD with unit trace for arbitrary counts") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<std::int64_t> dn(0, 3000);
  const ProjectorSet set = projector_set(2, 3);
  const TomographyRun start = simulate_counts(Eigen::Matrix4cd::Identity() / 4.0, set, kTotal);
  for (int trial = 0; trial < 100; ++trial) {
    TomographyRun run = start;
    run.total_counts = 0;
    for (auto& c : run.counts) run.total_counts += (c = dn(rng));
    const MleResult r = mle_reconstruct(run);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> eig(r.rho);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-12);
    CHECK(r.rho.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.log_likelihood >= poisson_log_likelihood(run, Eigen::Matrix4cd::Identity() / 4.0) - 1e-12);
  }
}

TEST_CASE("reconstruction error shrinks with more counts") {
  const ProjectorSet set = projector_set(1, 2);
  const Eigen::Matrix4cd bell = embedded_target(0.0);
  std::vector<double> medians;
  for (std::int64_t per_setting : {100, 1000, 10000}) {
    std::vector<double> td;
    for (std::uint64_t seed = 1; seed <= 10; ++seed)
      td.push_back(trace_distance(mle_reconstruct(simulate_counts(bell, set, 9 * per_setting, seed)).rho, bell));
    medians.push_back(median(td));
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("maximally mixed counts reconstruct to a nearly mixed state") {
  const ProjectorSet set = projector_set(1, 2);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const double gamma = purity(mle_reconstruct(simulate_counts(Eigen::Matrix4cd::Identity() / 4.0, set, kTotal, seed)).rho);
    CHECK(gamma >= 0.25);
    CHECK(gamma <= 0.30);
  }
}

TEST_CASE("efficiency weights are part of the model") {
  const ProjectorSet set = projector_set(1, 2);
  std::vector<double> eff(36, 1.0);
  for (std::size_t j = 0; j < eff.size(); j += 3) eff[j] = 0.6;
  const Eigen::Matrix4cd bell = embedded_target(0.4);
  TomographyRun run = simulate_counts(bell, set, 900'000'000LL, std::nullopt, eff);
  CHECK(trace_distance(mle_reconstruct(run).rho, bell) < 1e-3);
  run.efficiency.assign(5, 1.0);
  CHECK(code_of([&] { run.validate(); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("visibility") {
  CHECK(visibility(Eigen::MatrixXd::Identity(5, 5)) == doctest::Approx(1.0));
  Eigen::MatrixXd m(2, 2);
  m << 9, 1, 1, 9;
  CHECK(visibility(m) == doctest::Approx(0.9));
  CHECK(visibility(Eigen::MatrixXd::Ones(3, 3)) == doctest::Approx(1.0 / 3.0));
  CHECK(code_of([] { visibility(Eigen::MatrixXd::Zero(2, 2)); }) == ErrorCode::EmptyMatrix);
  CHECK(code_of([] { visibility(Eigen::MatrixXd::Ones(2, 3)); }) == ErrorCode::DimensionMismatch);
  Eigen::MatrixXd negative = Eigen::MatrixXd::Identity(2, 2);
  negative(0, 1) = -1.0;
  CHECK(code_of([&] { visibility(negative); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("counts CSV round trip and schema errors") {
  const ProjectorSet set = projector_set(1, 2);
  const TomographyRun run = simulate_counts(embedded_target(0.0), set, kTotal, 5);
  std::istringstream in(counts_text(run));
  const TomographyRun back = read_counts_csv(in, 1, 2);
  CHECK(back.counts == run.counts);
  CHECK(back.total_counts == std::accumulate(run.counts.begin(), run.counts.end(), std::int64_t{0}));

  auto parse_error_row = [](const std::string& text) -> std::string {
    std::istringstream s(text);
    try {
      read_counts_csv(s, 1, 2);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) return e.what();
    }
    return "no error";
  };
  const std::string good = counts_text(run);
  const std::string header = good.substr(0, good.find('\n') + 1);
  CHECK(parse_error_row("a,b,c\n").find("header") != std::string::npos);
  CHECK(parse_error_row(header + "0,l,l,12\n0,l,l,13\n").find("row 2") != std::string::npos);
  CHECK(parse_error_row(header + "0,l,lt,12\n").find("row 1") != std::string::npos);
  CHECK(parse_error_row(header + "0,l,l,-3\n").find("row 1") != std::string::npos);
  CHECK(parse_error_row(header + "0,l,l,x\n").find("row 1") != std::string::npos);
  CHECK(parse_error_row(header + "40,l,l,1\n").find("row 1") != std::string::npos);
  CHECK(parse_error_row(header + "0,l,l,1\n").find("missing") != std::string::npos);
}
