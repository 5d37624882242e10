#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace urbanpulse {

// Minutes since 1970-01-01T00:00Z.
using Minute = std::int64_t;

inline constexpr std::int64_t kMinutesPerHour = 60;
inline constexpr std::int64_t kMinutesPerDay = 1440;
inline constexpr std::int64_t kMinutesPerWeek = 10080;

// 1970-01-05 was the first Monday after the Unix epoch.
inline constexpr Minute kFirstMondayMinute = 4 * kMinutesPerDay;

// Minute-of-week in [0, 10080), anchored to Monday 00:00 UTC.
constexpr int minute_of_week(Minute t) {
  const std::int64_t r = (t - kFirstMondayMinute) % kMinutesPerWeek;
  return static_cast<int>(r < 0 ? r + kMinutesPerWeek : r);
}

// Index of the Monday-anchored week containing t.
constexpr std::int64_t week_index(Minute t) {
  const std::int64_t d = t - kFirstMondayMinute;
  return d >= 0 ? d / kMinutesPerWeek : -((-d + kMinutesPerWeek - 1) / kMinutesPerWeek);
}

// Day number (days since epoch) containing t.
constexpr std::int64_t day_index(Minute t) {
  return t >= 0 ? t / kMinutesPerDay : -((-t + kMinutesPerDay - 1) / kMinutesPerDay);
}

// Parses "YYYY-MM-DDTHH:MM[:SS]Z" (seconds truncated) or a bare integer of
// Unix epoch seconds (truncated to the minute). Throws ParseError.
Minute parse_minute(std::string_view text);

// "YYYY-MM-DDTHH:MMZ".
std::string format_minute(Minute t);

// "YYYY-MM-DD" -> day index.
std::int64_t parse_date(std::string_view text);
std::string format_date(std::int64_t day);

// "HH:MM" -> minutes after midnight.
int parse_time_of_day(std::string_view text);

}  // namespace urbanpulse
