#pragma once

#include <cstdint>
#include <utility>

namespace urbanpulse {

struct ChartParams {
  double half_life = 1440.0;  // minutes
  double h = 3.0;
  double sigma_floor = 0.5;
};

// Exponentially decayed sums of weights, deviations and squared deviations.
// Only these three scalars are needed to recover the weighted mean and
// variance of the whole history.
struct ChartState {
  double s0 = 0.0;
  double s1 = 0.0;
  double s2 = 0.0;

  double mean() const { return s0 > 0.0 ? s1 / s0 : 0.0; }
  // Clamped at 0 against cancellation on near-constant streams.
  double variance() const;
  double sigma() const;

  friend bool operator==(const ChartState&, const ChartState&) = default;
};

struct AdaptiveScore {
  double z = 0.0;
  bool flagged = false;
  double mean = 0.0;
  double sigma = 0.0;  // unfloored
};

// Per-minute decay factor 2^(-1/half_life).
double decay_per_minute(double half_life);

// Decays every sum by 2^(-elapsed/half_life).
ChartState decay(const ChartState& state, double elapsed, double half_life);

// One chart update, `elapsed` minutes after the previous one. The decision
// uses the moments before this observation; a flagged deviation is not
// absorbed, so the new state is the decayed old one.
std::pair<ChartState, AdaptiveScore> chart_step(const ChartState& state, double eps,
                                                const ChartParams& params, double elapsed = 1.0);

// Absorbs `eps` unconditionally (warm-up).
ChartState chart_absorb(const ChartState& state, double eps, double half_life,
                        double elapsed = 1.0);

}  // namespace urbanpulse
