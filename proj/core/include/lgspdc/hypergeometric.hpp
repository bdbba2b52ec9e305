#pragma once

#include <complex>

namespace lgspdc {

/// Regularized Gauss hypergeometric function 2F1~(a, b; c; z) = 2F1(a, b; c; z) / Gamma(c)
/// for integer a, b >= 1 and integer c <= 1:
///
///   sum_{n >= max(0, 1-c)} (a)_n (b)_n z^n / (Gamma(c+n) n!)
///
/// Direct series for |z| <= 0.6 with |z - 1| <= 1; otherwise the Pfaff
/// transformation (1-z)^-a 2F1~(a, c-b; c; z/(z-1)), whose series terminates
/// because c-b <= 0.
/// Series stop when three consecutive terms fall below 1e-15 of the partial
/// sum; more than 10000 terms throws NoConvergence.
std::complex<double> hyp2f1_regularized(int a, int b, int c, std::complex<double> z);

}  // namespace lgspdc
