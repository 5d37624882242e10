#include "urbanpulse/adaptive.hpp"

#include <algorithm>

namespace urbanpulse {

PositionedChart seed_chart(const ForecastModel& model, std::span<const ActivityCube::Count> series,
                           MinuteRange span, MinuteRange window, const HolidayCalendar& holidays,
                           double half_life) {
  PositionedChart chart;
  const Minute lo = std::max(window.begin, span.begin);
  const Minute hi = std::min(window.end, span.end);
  for (Minute t = lo; t < hi; ++t) {
    const auto v = series[static_cast<std::size_t>(t - span.begin)];
    if (v == ActivityCube::kMissing) continue;
    const double eps = v - model.predict(t, holidays.is_holiday(t));
    const double elapsed = chart.started ? static_cast<double>(t - chart.last) : 0.0;
    chart.state = chart_absorb(chart.state, eps, half_life, elapsed);
    chart.last = t;
    chart.started = true;
  }
  return chart;
}

std::vector<std::optional<AdaptiveScore>> adaptive_score_series(
    const ForecastModel& model, std::span<const ActivityCube::Count> series, MinuteRange span,
    const HolidayCalendar& holidays, const ChartParams& params, PositionedChart& chart) {
  std::vector<std::optional<AdaptiveScore>> out(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto v = series[i];
    if (v == ActivityCube::kMissing) continue;
    const Minute t = span.begin + static_cast<Minute>(i);
    const double eps = v - model.predict(t, holidays.is_holiday(t));
    // A seed taken from after this minute (first fold) has no meaningful
    // elapsed time; uniform decay leaves the moments unchanged anyway.
    const double elapsed = chart.started ? static_cast<double>(std::max<Minute>(t - chart.last, 1)) : 0.0;
    auto [next, score] = chart_step(chart.state, eps, params, elapsed);
    chart.state = next;
    chart.last = t;
    chart.started = true;
    out[i] = score;
  }
  return out;
}

double sigma_floor_for(double training_mean, double absolute, double relative) {
  return std::max(absolute, relative * training_mean);
}

}  // namespace urbanpulse
