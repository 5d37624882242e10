#pragma once

#include <span>
#include <vector>

#include "urbanpulse/activity.hpp"
#include "urbanpulse/butterworth.hpp"

namespace urbanpulse {

struct SignatureParams {
  ButterworthParams filter;
  // Every minute-of-week needs at least this many training samples.
  int min_weeks = 3;
};

// Nominal weekly profile of one (cell, service): 10080 values indexed by
// minute-of-week.
struct WeeklySignature {
  std::vector<double> values;

  double operator[](int minute_of_week) const {
    return values[static_cast<std::size_t>(minute_of_week)];
  }
};

// Per minute-of-week median over the present samples of `series`, whose first
// element is at `span.begin`. Also reports the smallest sample count seen.
std::vector<double> minute_of_week_medians(std::span<const ActivityCube::Count> series,
                                           MinuteRange span, int* min_samples = nullptr);

// Median profile smoothed by circular zero-phase Butterworth filtering.
// Throws InsufficientDataError if some minute-of-week has fewer than
// params.min_weeks samples.
WeeklySignature compute_weekly_signature(std::span<const ActivityCube::Count> series,
                                         MinuteRange span, const SignatureParams& params);

// Signed deviation of an observation from the nominal profile.
inline double compute_deviation(double observed, const WeeklySignature& signature,
                                int minute_of_week) {
  return observed - signature[minute_of_week];
}

// Deviations of every present minute of `series` from `signature`.
std::vector<double> training_deviations(std::span<const ActivityCube::Count> series,
                                        MinuteRange span, const WeeklySignature& signature);

}  // namespace urbanpulse
