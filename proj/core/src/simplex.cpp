#include "lgspdc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lgspdc/error.hpp"

namespace lgspdc {

namespace {

struct Coefficients {
  double reflect, expand, contract, shrink;
};

Coefficients coefficients(std::size_t n, bool adaptive) {
  if (!adaptive || n < 2) return {1.0, 2.0, 0.5, 0.5};
  const double d = static_cast<double>(n);
  return {1.0, 1.0 + 2.0 / d, 0.75 - 1.0 / (2.0 * d), 1.0 - 1.0 / d};
}

class Run {
 public:
  Run(const CostFunction& cost, const SimplexOptions& options, SimplexResult& result)
      : cost_(cost), options_(options), result_(result) {}

  double eval(const std::vector<double>& x) {
    ++result_.evaluations;
    const double v = cost_(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  }

  // One simplex descent from `start`; returns true on convergence.
  bool descend(std::vector<double>& best, double& best_value, double step, int budget) {
    const std::size_t n = best.size();
    const Coefficients c = coefficients(n, options_.adaptive);
    std::vector<std::vector<double>> pts(n + 1, best);
    std::vector<double> vals(n + 1);
    vals[0] = best_value;
    for (std::size_t j = 0; j < n; ++j) {
      pts[j + 1][j] += step;
      vals[j + 1] = eval(pts[j + 1]);
    }
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    bool converged = false;
    for (int it = 0; it < budget; ++it) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
      const std::size_t lo = order.front(), hi = order.back(), second = order[n - 1];
      if (converged_now(pts, vals, lo, hi)) {
        converged = true;
        break;
      }
      ++result_.iterations;
      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t j = 0; j <= n; ++j)
        if (j != hi)
          for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[j][k];
      for (auto& v : centroid) v /= static_cast<double>(n);

      auto along = [&](double t, std::vector<double>& out) {
        for (std::size_t k = 0; k < n; ++k) out[k] = centroid[k] + t * (pts[hi][k] - centroid[k]);
      };
      along(-c.reflect, trial);
      const double fr = eval(trial);
      if (fr < vals[lo]) {
        along(-c.reflect * c.expand, trial2);
        const double fe = eval(trial2);
        if (fe < fr) {
          pts[hi] = trial2;
          vals[hi] = fe;
        } else {
          pts[hi] = trial;
          vals[hi] = fr;
        }
      } else if (fr < vals[second]) {
        pts[hi] = trial;
        vals[hi] = fr;
      } else {
        const bool outside = fr < vals[hi];
        along(outside ? -c.reflect * c.contract : c.contract, trial2);
        const double fc = eval(trial2);
        if (fc < (outside ? fr : vals[hi])) {
          pts[hi] = trial2;
          vals[hi] = fc;
        } else {
          for (std::size_t j = 0; j <= n; ++j) {
            if (j == lo) continue;
            for (std::size_t k = 0; k < n; ++k) pts[j][k] = pts[lo][k] + c.shrink * (pts[j][k] - pts[lo][k]);
            vals[j] = eval(pts[j]);
          }
        }
      }
      if (options_.record_trajectory) result_.trajectory.push_back(*std::min_element(vals.begin(), vals.end()));
    }
    const auto lo = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
    if (vals[lo] <= best_value) {
      best = pts[lo];
      best_value = vals[lo];
    }
    return converged;
  }

 private:
  bool converged_now(const std::vector<std::vector<double>>& pts, const std::vector<double>& vals,
                     std::size_t lo, std::size_t hi) const {
    if (!(vals[hi] - vals[lo] <= options_.tolerance)) return false;
    if (options_.x_tolerance <= 0.0) return true;
    for (const auto& p : pts)
      for (std::size_t k = 0; k < p.size(); ++k)
        if (std::abs(p[k] - pts[lo][k]) > options_.x_tolerance) return false;
    return true;
  }

  const CostFunction& cost_;
  const SimplexOptions& options_;
  SimplexResult& result_;
};

}  // namespace

SimplexResult nelder_mead(const CostFunction& cost, std::vector<double> start, const SimplexOptions& options) {
  if (start.empty()) throw Error(ErrorCode::InvalidArgument, "simplex needs at least one parameter");
  if (options.max_iterations < 0 || !(options.initial_step > 0.0))
    throw Error(ErrorCode::InvalidArgument, "simplex needs max_iterations >= 0 and initial_step > 0");
  SimplexResult result;
  Run run(cost, options, result);
  double best_value = run.eval(start);
  result.start_value = best_value;
  // Restarts only polish an already converged point; running out of budget
  // during a restart does not undo that convergence.
  bool converged = run.descend(start, best_value, options.initial_step, options.max_iterations);
  for (int attempt = 0; converged && attempt < options.restarts; ++attempt) {
    const int budget = options.max_iterations - result.iterations;
    if (budget <= 0) break;
    const double before = best_value;
    if (!run.descend(start, best_value, options.initial_step, budget)) break;
    if (before - best_value <= options.tolerance) break;
  }
  result.x = std::move(start);
  result.value = best_value;
  result.converged = converged;
  return result;
}

}  // namespace lgspdc
