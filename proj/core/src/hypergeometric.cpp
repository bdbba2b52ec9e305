#include "lgspdc/hypergeometric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lgspdc/error.hpp"

namespace lgspdc {

namespace {

constexpr int kMaxTerms = 10000;

// sum_{n >= n0} (a)_n (b)_n z^n / (Gamma(c+n) n!), with n0 = max(0, 1-c) so
// that c + n0 == 1 and the first term needs no Gamma evaluation.
std::complex<double> regularized_series(int a, int b, int c, std::complex<double> z) {
  const int n0 = std::max(0, 1 - c);
  std::complex<double> term = 1.0;
  for (int n = 0; n < n0; ++n) term *= static_cast<double>(a + n) * static_cast<double>(b + n) / (n + 1.0) * z;
  std::complex<double> sum = term;
  int small = 0;
  for (int n = n0; n < n0 + kMaxTerms; ++n) {
    const double num = static_cast<double>(a + n) * static_cast<double>(b + n);
    if (num == 0.0) return sum;  // a nonpositive upper parameter truncates the series
    term *= num / (static_cast<double>(c + n) * (n + 1.0)) * z;
    sum += term;
    if (std::abs(term) < 1e-15 * std::abs(sum)) {
      if (++small == 3) return sum;
    } else {
      small = 0;
    }
    if (term == 0.0) return sum;
  }
  throw Error(ErrorCode::NoConvergence,
              "2F1 series did not converge (a=" + std::to_string(a) + ", b=" + std::to_string(b) +
                  ", c=" + std::to_string(c) + ")");
}

std::complex<double> integer_power(std::complex<double> base, int exponent) {
  std::complex<double> result = 1.0;
  while (exponent > 0) {
    if (exponent & 1) result *= base;
    base *= base;
    exponent >>= 1;
  }
  return result;
}

}  // namespace

std::complex<double> hyp2f1_regularized(int a, int b, int c, std::complex<double> z) {
  if (a < 1 || b < 1 || c > 1)
    throw Error(ErrorCode::InvalidArgument, "hyp2f1_regularized needs a, b >= 1 and c <= 1");
  if (z == 1.0) throw Error(ErrorCode::NoConvergence, "2F1 evaluated at the branch point z = 1");
  const std::complex<double> w = z / (z - 1.0);
  // For Re z < 1/2 the transformed argument is the smaller one; the direct
  // series there cancels badly (complex z, large Pochhammer growth).
  if (std::abs(z) <= 0.6 && std::abs(z) <= std::abs(w)) return regularized_series(a, b, c, z);
  return integer_power(1.0 / (1.0 - z), a) * regularized_series(a, c - b, c, w);
}

}  // namespace lgspdc
