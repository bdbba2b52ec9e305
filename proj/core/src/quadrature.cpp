#include "lgspdc/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "lgspdc/error.hpp"

namespace lgspdc {

QuadratureRule gauss_legendre(int order, double a, double b) {
  if (order < 1) throw Error(ErrorCode::InvalidArgument, "quadrature order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const int m = (order + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration on P_n from the Tricomi initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p2) / j;
      }
      dp = order * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[order - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[order - 1 - i] = half * w;
  }
  return rule;
}

std::vector<double> trapezoid_weights(std::size_t count, double h) {
  std::vector<double> w(count, h);
  if (count == 0) return w;
  if (count == 1) {
    w[0] = 0.0;
    return w;
  }
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

double trapezoid(std::span<const double> samples, double h) {
  if (samples.size() < 2) return 0.0;
  double sum = 0.5 * (samples.front() + samples.back());
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) sum += samples[i];
  return sum * h;
}

}  // namespace lgspdc
