#pragma once

// Temperature selection: the largest alpha for which BP without observations
// still returns (approximately) the encoded node marginals.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>

#include "latis/ising.hpp"
#include "latis/propagation.hpp"

namespace latis {

struct AlphaSearchConfig {
  double precision = 0.01;
  double tau = 0.05;  ///< max tolerated |b_i(1) - p_i1|
  Schedule schedule;
};

struct CalibrationResult {
  double alpha = 0.0;          ///< lower (feasible) end of the final bracket
  double upper = 1.0;          ///< upper end, infeasible unless never evaluated
  std::size_t evaluations = 0;
};

/// max_i |b_i(1) - p_i1| after BP with no observations; +inf when BP does not converge.
inline double deviation(const IsingModel& model, const Schedule& schedule = {}) {
  const auto run = bp_run(model, schedule);
  if (!run.report.converged) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < model.num_nodes(); ++i)
    worst = std::max(worst, std::abs(run.state.belief1(i) - model.node_p1(i)));
  return worst;
}

/// Bisection on [0, 1] keeping (low feasible, high infeasible). alpha = 1 is
/// never evaluated: at alpha = 1 uniform messages are an exact BP fixed point
/// of the Bethe form, so it would always look feasible.
inline CalibrationResult calibrate(const std::function<double(double)>& deviation_at,
                                   const AlphaSearchConfig& config = {}) {
  if (!(config.precision > 0.0)) throw std::invalid_argument("precision must be positive");
  if (!(config.tau > 0.0 && config.tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  CalibrationResult r;
  ++r.evaluations;
  if (!(deviation_at(0.0) <= config.tau)) throw std::logic_error("inconsistent model at alpha=0");
  double lo = 0.0, hi = 1.0;
  while (hi - lo > config.precision) {
    const double mid = 0.5 * (lo + hi);
    ++r.evaluations;
    if (deviation_at(mid) <= config.tau)
      lo = mid;
    else
      hi = mid;
  }
  r.alpha = lo;
  r.upper = hi;
  return r;
}

inline CalibrationResult calibrate(const IsingModel& model, const AlphaSearchConfig& config = {}) {
  return calibrate([&](double alpha) { return deviation(model.with_alpha(alpha), config.schedule); }, config);
}

}  // namespace latis
