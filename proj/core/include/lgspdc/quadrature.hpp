#pragma once

#include <span>
#include <vector>

namespace lgspdc {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule of the given order mapped onto [a, b].
QuadratureRule gauss_legendre(int order, double a = -1.0, double b = 1.0);

/// Composite trapezoid weights for samples on a uniform grid of spacing h.
std::vector<double> trapezoid_weights(std::size_t count, double h);

/// Trapezoid integral of uniformly spaced samples.
double trapezoid(std::span<const double> samples, double h);

}  // namespace lgspdc
