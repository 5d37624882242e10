#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "urbanpulse/activity.hpp"

namespace urbanpulse {

// Set of calendar days (days since epoch) treated as holidays.
class HolidayCalendar {
 public:
  HolidayCalendar() = default;
  explicit HolidayCalendar(std::set<std::int64_t> days) : days_(std::move(days)) {}
  // "YYYY-MM-DD" strings.
  static HolidayCalendar from_dates(const std::vector<std::string>& dates);

  bool is_holiday(Minute t) const { return days_.count(day_index(t)) > 0; }
  const std::set<std::int64_t>& days() const { return days_; }

 private:
  std::set<std::int64_t> days_;
};

struct ForecasterParams {
  int fourier_order = 10;
  // Extra harmonics 7, 14, ..., 7 * daily_order of the week, i.e. a daily
  // cycle. Weekly harmonics alone up to order 10 cannot follow one.
  int daily_order = 10;
  double knots_per_month = 4.0;
  // Ridge penalty per training sample on every coefficient but the intercept.
  double ridge = 1e-6;
  int min_weeks = 2;
};

// Additive nominal-activity model: piecewise-linear trend, weekly Fourier
// seasonality and a holiday offset.
struct ForecastModel {
  Minute origin = 0;          // trend time 0
  double time_scale = 1.0;    // minutes per unit of trend time
  std::vector<double> knots;  // in trend time units
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<double> hinge;  // one per knot
  std::vector<int> harmonics;  // weekly harmonic number of each Fourier pair
  std::vector<double> fourier_cos;
  std::vector<double> fourier_sin;
  double holiday = 0.0;

  double trend(Minute t) const;
  double seasonality(int minute_of_week) const;
  double predict(Minute t, bool is_holiday) const {
    return trend(t) + seasonality(minute_of_week(t)) + (is_holiday ? holiday : 0.0);
  }
};

// Sorted harmonic numbers 1..fourier_order plus the daily multiples of 7.
std::vector<int> seasonal_harmonics(const ForecasterParams& params);

// Ridge least squares over the present minutes of `series` (first element at
// span.begin). Throws InsufficientDataError with fewer than min_weeks weeks of
// present minutes.
ForecastModel fit_forecaster(std::span<const ActivityCube::Count> series, MinuteRange span,
                             const HolidayCalendar& holidays, const ForecasterParams& params = {});

inline double forecast(const ForecastModel& model, Minute t, bool is_holiday) {
  return model.predict(t, is_holiday);
}

}  // namespace urbanpulse
