#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "lgspdc/error.hpp"
#include "lgspdc/lgmodes.hpp"
#include "lgspdc/units.hpp"

using namespace lgspdc;
using namespace lgspdc::units;

namespace {

constexpr double kLgP1At2OverW = 4.402879895212197e-6;  // p=1, l=0, w=30 um, |q|=2/w
constexpr double kT1_2_2_40um = -1.1792866968621584e-23;

}  // namespace

TEST_CASE("fundamental mode peaks at w/sqrt(2 pi)") {
  const double w = um(30);
  const auto v = lg_momentum_amplitude({0, 0}, w, 0.0, 0.0);
  CHECK(v.real() == doctest::Approx(w / std::sqrt(2 * pi)).epsilon(1e-15));
  CHECK(v.imag() == 0.0);
}

TEST_CASE("vortex modes vanish on axis") {
  CHECK(std::abs(lg_momentum_amplitude({0, 1}, um(17), 0.0, 0.0)) == 0.0);
  CHECK(std::abs(lg_momentum_amplitude({2, -3}, um(40), 0.0, 0.0)) == 0.0);
}

TEST_CASE("radial mode value matches the reference evaluation") {
  const double w = um(30);
  const auto v = lg_momentum_amplitude({1, 0}, w, 2.0 / w, 0.0);
  CHECK(v.real() == doctest::Approx(kLgP1At2OverW).epsilon(1e-13));
  CHECK(std::abs(v.imag()) < 1e-25);
}

TEST_CASE("azimuthal phase is exp(+i l phi)") {
  const double w = um(25), q = 1.3 / w;
  for (int ell : {-3, -1, 1, 2, 4})
    for (double phi : {0.3, 1.9, -2.4}) {
      const auto v = lg_momentum_amplitude({1, ell}, w, q * std::cos(phi), q * std::sin(phi));
      const auto expected = lg_radial({1, ell}, w, q) * std::polar(1.0, ell * phi);
      CHECK(std::abs(v - expected) < 1e-14 * std::abs(expected));
    }
}

TEST_CASE("T coefficients: direct substitution and reference value") {
  CHECK(t_coefficient(0, 0, 0, 1.0) == doctest::Approx(1.0 / std::sqrt(2 * pi)).epsilon(1e-15));
  CHECK(t_coefficient(0, 1, 0, 1.0) == doctest::Approx(-1.0 / std::sqrt(2 * pi)).epsilon(1e-15));
  CHECK(t_coefficient(1, 2, 2, um(40)) == doctest::Approx(kT1_2_2_40um).epsilon(1e-13));
}

TEST_CASE("T coefficients scale with the waist and alternate in sign") {
  const double w0 = um(33);
  for (int p = 0; p <= 4; ++p)
    for (int ell = -4; ell <= 4; ++ell)
      for (int u = 0; u <= p; ++u) {
        const double ratio = t_coefficient(u, p, ell, 2 * w0) / t_coefficient(u, p, ell, w0);
        CHECK(ratio == doctest::Approx(std::ldexp(1.0, 2 * u + std::abs(ell) + 1)).epsilon(1e-14));
        const double sign = ((p + u) % 2 == 0) ? 1.0 : -1.0;
        CHECK(t_coefficient(u, p, ell, w0) * sign > 0.0);
      }
  CHECK_THROWS_AS(t_coefficient(3, 2, 0, w0), Error);
  CHECK_THROWS_AS(t_coefficient(-1, 2, 0, w0), Error);
}

TEST_CASE("T expansion reproduces the radial mode") {
  const double w = um(42);
  for (int p = 0; p <= 3; ++p)
    for (int ell : {0, 1, 3})
      for (double x : {0.2, 1.0, 2.5}) {
        const double rho = x / w;
        double sum = 0.0;
        for (int u = 0; u <= p; ++u)
          sum += t_coefficient(u, p, ell, w) / factorial(u) * std::pow(rho, 2 * u + std::abs(ell));
        sum *= std::exp(-w * w * rho * rho / 4.0);
        const double direct = lg_radial({p, ell}, w, rho);
        CHECK(sum == doctest::Approx(direct).epsilon(1e-12).scale(std::abs(direct) + 1e-20));
      }
}

TEST_CASE("factorial table is exact") {
  CHECK(factorial(0) == 1.0);
  CHECK(factorial(10) == 3628800.0);
  CHECK(factorial(20) == 2432902008176640000.0);
  CHECK_THROWS_AS(factorial(65), Error);
  CHECK_THROWS_AS(factorial(-1), Error);
}

TEST_CASE("modes are orthonormal on a 256x256 momentum grid") {
  const double w = um(30);
  constexpr int n = 256;
  const double extent = 8.0 / w, h = 2 * extent / n;
  std::vector<LGIndex> modes;
  for (int p = 0; p <= 2; ++p)
    for (int ell = -3; ell <= 3; ++ell) modes.push_back({p, ell});
  std::vector<std::vector<std::complex<double>>> samples;
  for (const auto& m : modes) {
    std::vector<std::complex<double>> s(n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        s[i * n + j] = lg_momentum_amplitude(m, w, -extent + (i + 0.5) * h, -extent + (j + 0.5) * h);
    samples.push_back(std::move(s));
  }
  double worst = 0.0;
  for (std::size_t a = 0; a < modes.size(); ++a)
    for (std::size_t b = a; b < modes.size(); ++b) {
      std::complex<double> sum = 0.0;
      for (int k = 0; k < n * n; ++k) sum += std::conj(samples[a][k]) * samples[b][k];
      sum *= h * h;
      worst = std::max(worst, std::abs(sum - (a == b ? 1.0 : 0.0)));
    }
  CHECK(worst < 1e-6);
}
