#include "urbanpulse/control_chart.hpp"

#include <algorithm>
#include <cmath>

namespace urbanpulse {

double ChartState::variance() const {
  if (!(s0 > 0.0)) return 0.0;
  const double mu = s1 / s0;
  return std::max(s2 / s0 - mu * mu, 0.0);
}

double ChartState::sigma() const { return std::sqrt(variance()); }

double decay_per_minute(double half_life) { return std::exp2(-1.0 / half_life); }

ChartState decay(const ChartState& state, double elapsed, double half_life) {
  const double d = std::exp2(-elapsed / half_life);
  return {state.s0 * d, state.s1 * d, state.s2 * d};
}

std::pair<ChartState, AdaptiveScore> chart_step(const ChartState& state, double eps,
                                                const ChartParams& params, double elapsed) {
  AdaptiveScore score;
  score.mean = state.mean();
  score.sigma = state.sigma();
  const double scale = std::max(score.sigma, params.sigma_floor);
  score.z = (eps - score.mean) / scale;
  score.flagged = eps >= score.mean + params.h * scale;
  ChartState next = decay(state, elapsed, params.half_life);
  if (!score.flagged) {
    next.s0 += 1.0;
    next.s1 += eps;
    next.s2 += eps * eps;
  }
  return {next, score};
}

ChartState chart_absorb(const ChartState& state, double eps, double half_life, double elapsed) {
  ChartState next = decay(state, elapsed, half_life);
  next.s0 += 1.0;
  next.s1 += eps;
  next.s2 += eps * eps;
  return next;
}

}  // namespace urbanpulse
