#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include <Eigen/Eigenvalues>

#include "fixtures.hpp"
#include "lgspdc/error.hpp"
#include "lgspdc/state.hpp"

using namespace lgspdc;
using namespace lgspdc::units;
using cd = std::complex<double>;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an lgspdc::Error");
  return ErrorCode::ParseError;
}

Eigen::Index index_of(const std::vector<LGIndex>& modes, LGIndex m) {
  for (std::size_t k = 0; k < modes.size(); ++k)
    if (modes[k] == m) return static_cast<Eigen::Index>(k);
  return -1;
}

int count_above(const Eigen::MatrixXd& m, double threshold) {
  return static_cast<int>((m.array() > threshold).count());
}

}  // namespace

TEST_CASE("correlation matrix: normalization, OAM anti-correlation and l -> -l symmetry") {
  const SpdcConfig config = fixtures::decomposition_config();
  const DetuningGrid grid = fixtures::default_grid(config);
  const ModeCorrelationMatrix m = joint_correlation_matrix(config, 2, 3, grid);
  CHECK(m.probabilities.rows() == 21);
  CHECK(m.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.probabilities.minCoeff() >= 0.0);
  for (std::size_t r = 0; r < m.signal_modes.size(); ++r)
    for (std::size_t c = 0; c < m.idler_modes.size(); ++c) {
      const double v = m.probabilities(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      if (m.signal_modes[r].ell != -m.idler_modes[c].ell) CHECK(v == 0.0);
      // Relabelled entry (l_s, l_i) -> (-l_s, -l_i) is bit-identical.
      const auto rr = index_of(m.signal_modes, {m.signal_modes[r].p, -m.signal_modes[r].ell});
      const auto cc = index_of(m.idler_modes, {m.idler_modes[c].p, -m.idler_modes[c].ell});
      CHECK(m.probabilities(rr, cc) == v);
    }
  // OAM-diagonal weight decreases with |l|.
  double previous = 2.0;
  for (int ell = 0; ell <= 3; ++ell) {
    double weight = 0.0;
    for (int ps = 0; ps <= 2; ++ps)
      for (int pi = 0; pi <= 2; ++pi)
        weight += m.probabilities(index_of(m.signal_modes, {ps, ell}), index_of(m.idler_modes, {pi, -ell}));
    CHECK(weight < previous);
    previous = weight;
  }
}

TEST_CASE("narrowband filtering removes modes from the decomposition") {
  const SpdcConfig config = fixtures::decomposition_config();
  const DetuningGrid grid = fixtures::default_grid(config);
  const auto broad = joint_correlation_matrix(config, 2, 3, grid);
  const auto narrow = joint_correlation_matrix(config, 2, 3, grid, SpectralWindow{nm(809.66), nm(0.03)});
  CHECK(count_above(narrow.probabilities, 0.01) < count_above(broad.probabilities, 0.01));
  CHECK(narrow.window.has_value());
  CHECK(narrow.probabilities.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("correlation matrix contract errors") {
  const SpdcConfig config = fixtures::decomposition_config();
  const DetuningGrid grid = fixtures::default_grid(config, 201);
  CHECK(code_of([&] { joint_correlation_matrix(config, 5, 1, grid); }) == ErrorCode::BudgetExceeded);
  CHECK(code_of([&] { joint_correlation_matrix(config, 1, 7, grid); }) == ErrorCode::BudgetExceeded);
  CHECK(code_of([&] { joint_correlation_matrix(config, 1, 1, grid, SpectralWindow{nm(830), nm(0.03)}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("correlation matrix does not depend on the thread count") {
  const SpdcConfig config = fixtures::decomposition_config();
  const DetuningGrid grid = fixtures::default_grid(config, 401);
  const auto one = joint_correlation_matrix(config, 2, 2, grid, std::nullopt, {.threads = 1});
  const auto four = joint_correlation_matrix(config, 2, 2, grid, std::nullopt, {.threads = 4});
  CHECK(one.probabilities == four.probabilities);
}

TEST_CASE("spectral overlap") {
  const SpdcConfig config = fixtures::matching_config(142.0);
  const DetuningGrid grid = fixtures::default_grid(config);
  const auto m1 = CollectionMode::gaussian(1, um(25));
  const auto m1p = CollectionMode::gaussian(1, um(85));
  const auto m4 = CollectionMode::gaussian(4, um(42));
  CHECK(std::abs(spectral_overlap(config, m1, m1, grid)) == doctest::Approx(1.0).epsilon(1e-9));
  const double matched = std::abs(spectral_overlap(config, m1, m4, grid));
  const double mismatched = std::abs(spectral_overlap(config, m1p, m4, grid));
  CHECK(matched > 0.95);
  CHECK(mismatched < 0.8);
  CHECK(mismatched < matched);
  const auto a = collection_spectrum(config, m1, grid);
  const auto b = collection_spectrum(config, m4, fixtures::default_grid(config, 1001));
  CHECK(code_of([&] { spectral_overlap(a, b); }) == ErrorCode::GridMismatch);
}

TEST_CASE("single-order subspace gives the unit density matrix") {
  const SpdcConfig config = fixtures::matching_config();
  const auto modes = std::vector{CollectionMode::gaussian(2, um(29))};
  const auto rho = reduced_spatial_density(config, modes, fixtures::default_grid(config));
  REQUIRE(rho.rho.rows() == 1);
  CHECK(rho.rho(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rho.rho(0, 0).imag() == 0.0);
}

TEST_CASE("density matrices are PSD, unit trace and obey Cauchy-Schwarz") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dw(18.0, 90.0), dp(50.0, 200.0);
  std::uniform_int_distribution<int> dl(0, 4), dd(2, 4);
  for (int trial = 0; trial < 50; ++trial) {
    const SpdcConfig config = fixtures::matching_config(dp(rng));
    const DetuningGrid grid = fixtures::default_grid(config, 401);
    std::vector<CollectionMode> modes;
    const int d = dd(rng);
    for (int k = 0; k < d; ++k) modes.push_back(CollectionMode::gaussian(dl(rng), um(dw(rng))));
    const auto rho = reduced_spatial_density(config, modes, grid);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho.rho);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    CHECK(rho.rho.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((rho.rho - rho.rho.adjoint()).norm() < 1e-14);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c)
        CHECK(std::abs(rho.rho(r, c)) <= std::sqrt(rho.rho(r, r).real() * rho.rho(c, c).real()) + 1e-12);
    CHECK(purity(rho.rho) <= 1.0 + 1e-12);
    CHECK(purity(rho.rho) >= 1.0 / d - 1e-12);
  }
}

TEST_CASE("matched waists give a nearly pure two-order state") {
  const SpdcConfig config = fixtures::matching_config(142.0);
  const std::vector modes{CollectionMode::gaussian(1, um(25)), CollectionMode::gaussian(2, um(29))};
  const auto rho = reduced_spatial_density(config, modes, fixtures::default_grid(config));
  CHECK(purity(rho.rho) > 0.97);
}

TEST_CASE("purity and fidelity on textbook states") {
  Eigen::MatrixXcd pure = Eigen::MatrixXcd::Zero(2, 2);
  pure(0, 0) = 1.0;
  CHECK(purity(pure) == doctest::Approx(1.0));
  CHECK(purity(Eigen::MatrixXcd::Identity(2, 2) / 2.0) == doctest::Approx(0.5));

  Eigen::MatrixXcd bell = Eigen::MatrixXcd::Zero(4, 4);
  bell(0, 0) = bell(0, 3) = bell(3, 0) = bell(3, 3) = 0.5;
  Eigen::MatrixXcd zero_zero = Eigen::MatrixXcd::Zero(4, 4);
  zero_zero(0, 0) = 1.0;
  CHECK(fidelity(zero_zero, bell) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fidelity(bell, bell) == doctest::Approx(1.0).epsilon(1e-12));

  const auto target = target_state(1, 2, 0.0).rho;
  Eigen::MatrixXcd perturbed = target;
  perturbed(0, 0) += 1e-8;
  perturbed(1, 1) -= 1e-8;
  CHECK(fidelity(perturbed, target) > 1.0 - 1e-6);
  CHECK(code_of([&] { fidelity(target, bell); }) == ErrorCode::DimensionMismatch);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 20; ++k) {
    Eigen::MatrixXcd g(3, 3);
    for (int i = 0; i < 9; ++i) g(i / 3, i % 3) = cd(n01(rng), n01(rng));
    Eigen::MatrixXcd rho = g * g.adjoint();
    rho /= rho.trace().real();
    CHECK(fidelity(rho, rho) == doctest::Approx(1.0).epsilon(1e-9));
    const Eigen::MatrixXcd s = sqrtm_psd(rho);
    CHECK((s * s - rho).norm() < 1e-12);
  }
}

TEST_CASE("target states") {
  const auto t0 = target_state(1, 2, 0.0);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) CHECK(std::abs(t0.rho(r, c) - 0.5) < 1e-15);
  const auto tpi = target_state(1, 2, pi);
  CHECK(std::abs(tpi.rho(0, 1) + 0.5) < 1e-15);
  CHECK(purity(tpi.rho) == doctest::Approx(1.0));
  CHECK(code_of([] { target_state(3, 3); }) == ErrorCode::DegenerateSubspace);
}

TEST_CASE("pure-state fidelity shortcut agrees with the general route") {
  // A 1e-18 admixture of the maximally mixed state forces the general
  // sqrt-matrix route. Fidelity is not Lipschitz at pure states: the shift is
  // ~2 (d-1) sqrt(1e-18) plus the sqrt(0) rounding floor of that route.
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 2 + trial % 3;
    Eigen::MatrixXcd g(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) g(r, c) = cd(n01(rng), n01(rng));
    Eigen::MatrixXcd rho = g * g.adjoint();
    rho /= rho.trace().real();
    Eigen::VectorXcd psi(d);
    for (int r = 0; r < d; ++r) psi(r) = cd(n01(rng), n01(rng));
    psi.normalize();
    const Eigen::MatrixXcd pure = psi * psi.adjoint();
    const Eigen::MatrixXcd nearly = (1.0 - 1e-18) * pure + 1e-18 * Eigen::MatrixXcd::Identity(d, d) / d;
    const double shortcut = fidelity(rho, pure);
    CHECK(shortcut == doctest::Approx((psi.adjoint() * rho * psi)(0, 0).real()).epsilon(1e-13));
    CHECK(std::abs(fidelity(rho, nearly) - shortcut) < 1e-6);
    CHECK(fidelity(pure, rho) == doctest::Approx(shortcut).epsilon(1e-13));
  }
}

TEST_CASE("phase sweep recovers the relative phase") {
  const auto rho = target_state(1, 4, 1.234).rho;
  const PhaseScan best =
      max_fidelity_over_phase(rho, [](double phi) -> Eigen::MatrixXcd { return target_state(1, 4, phi).rho; });
  CHECK(best.fidelity == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(best.phase == doctest::Approx(1.234).epsilon(1e-6));
}
