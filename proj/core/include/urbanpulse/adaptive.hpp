#pragma once

#include <optional>
#include <span>
#include <vector>

#include "urbanpulse/activity.hpp"
#include "urbanpulse/control_chart.hpp"
#include "urbanpulse/forecaster.hpp"

namespace urbanpulse {

// A chart positioned in time: `state` reflects every absorbed residual up to
// and including minute `last`.
struct PositionedChart {
  ChartState state;
  Minute last = 0;
  bool started = false;
};

// Absorbs the residuals (observed - forecast) of every present minute of
// `series` inside `window`, with flagging disabled.
PositionedChart seed_chart(const ForecastModel& model, std::span<const ActivityCube::Count> series,
                           MinuteRange span, MinuteRange window, const HolidayCalendar& holidays,
                           double half_life);

// Forecast residual then chart step for every present minute of `series`
// (first element at span.begin) in chronological order. Missing minutes get
// no score; the next step decays by the true elapsed time. `chart` is
// advanced in place.
std::vector<std::optional<AdaptiveScore>> adaptive_score_series(
    const ForecastModel& model, std::span<const ActivityCube::Count> series, MinuteRange span,
    const HolidayCalendar& holidays, const ChartParams& params, PositionedChart& chart);

// sigma floor = max(absolute, relative * training mean count).
double sigma_floor_for(double training_mean, double absolute = 0.5, double relative = 1e-3);

}  // namespace urbanpulse
