#include "lgspdc/lgmodes.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <string>

#include "lgspdc/error.hpp"
#include "lgspdc/units.hpp"

namespace lgspdc {

namespace {

constexpr int kMaxFactorial = 64;

// Exact in uint64 up to 20!, then one rounding per multiplication.
constexpr std::array<double, kMaxFactorial + 1> make_factorials() {
  std::array<double, kMaxFactorial + 1> table{};
  std::uint64_t exact = 1;
  table[0] = 1.0;
  for (int n = 1; n <= kMaxFactorial; ++n) {
    if (n <= 20) {
      exact *= static_cast<std::uint64_t>(n);
      table[n] = static_cast<double>(exact);
    } else {
      table[n] = table[n - 1] * n;
    }
  }
  return table;
}

constexpr auto kFactorials = make_factorials();

}  // namespace

double factorial(int n) {
  if (n < 0 || n > kMaxFactorial)
    throw Error(ErrorCode::IndexError, "factorial argument " + std::to_string(n) + " outside [0, 64]");
  return kFactorials[n];
}

double lg_radial(LGIndex mode, double waist, double rho) {
  if (mode.p < 0) throw Error(ErrorCode::IndexError, "radial index p must be >= 0");
  if (!(waist > 0.0)) throw Error(ErrorCode::InvalidArgument, "waist must be > 0");
  const int l = std::abs(mode.ell);
  const double norm = waist * std::sqrt(factorial(mode.p) / (2.0 * units::pi * factorial(mode.p + l)));
  const double x = 0.5 * waist * waist * rho * rho;
  const double sign = (mode.p % 2 == 0) ? 1.0 : -1.0;
  return norm * sign * std::pow(rho * waist / std::sqrt(2.0), l) *
         std::assoc_laguerre(static_cast<unsigned>(mode.p), static_cast<unsigned>(l), x) *
         std::exp(-0.5 * x);
}

std::complex<double> lg_momentum_amplitude(LGIndex mode, double waist, double qx, double qy) {
  const double rho = std::hypot(qx, qy);
  const double phi = std::atan2(qy, qx);
  return lg_radial(mode, waist, rho) * std::polar(1.0, mode.ell * phi);
}

double t_coefficient(int u, int p, int ell, double waist) {
  if (u < 0 || u > p)
    throw Error(ErrorCode::IndexError,
                "T coefficient needs 0 <= u <= p (u=" + std::to_string(u) + ", p=" + std::to_string(p) + ")");
  const int l = std::abs(ell);
  const double sign = ((p + u) % 2 == 0) ? 1.0 : -1.0;
  return std::sqrt(factorial(p) * factorial(p + l) / units::pi) *
         std::pow(waist / std::sqrt(2.0), 2 * u + l + 1) * sign /
         (factorial(p - u) * factorial(l + u));
}

}  // namespace lgspdc
