#pragma once

#include <functional>
#include <span>
#include <vector>

namespace lgspdc {

struct SimplexOptions {
  int max_iterations = 5000;
  double tolerance = 1e-8;    // stop when f_worst - f_best <= tolerance
  double x_tolerance = 0.0;   // optional: also require max |x_j - x_best|_inf <= x_tolerance
  double initial_step = 0.1;  // edge of the axis-aligned start simplex
  bool adaptive = true;       // dimension-dependent coefficients (Gao & Han 2012)
  int restarts = 0;           // fresh simplices around the best point after convergence
  bool record_trajectory = false;
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  double start_value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> trajectory;  // best value after each iteration
};

using CostFunction = std::function<double(std::span<const double>)>;

/// Nelder-Mead downhill simplex. Non-finite costs count as +inf. Never
/// returns a point worse than `start`; `converged` is false when the
/// iteration cap was hit first.
SimplexResult nelder_mead(const CostFunction& cost, std::vector<double> start,
                          const SimplexOptions& options = {});

}  // namespace lgspdc
