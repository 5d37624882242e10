#include "urbanpulse/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

template <typename T>
bool parse_int(std::string_view s, T& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{m}, day{d}};
  if (!ymd.ok()) return INT64_MIN;
  return sys_days{ymd}.time_since_epoch().count();
}

std::int64_t parse_date_or_throw(std::string_view s, std::string_view whole) {
  int y = 0;
  unsigned mo = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !parse_int(s.substr(0, 4), y) ||
      !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d)) {
    throw ParseError("invalid date '" + std::string(whole) + "'");
  }
  const std::int64_t days = days_from_civil(y, mo, d);
  if (days == INT64_MIN) throw ParseError("invalid calendar date '" + std::string(whole) + "'");
  return days;
}

}  // namespace

Minute parse_minute(std::string_view text) {
  if (text.empty()) throw ParseError("empty timestamp");
  std::int64_t seconds = 0;
  if (parse_int(text, seconds)) {
    return seconds >= 0 ? seconds / 60 : -((-seconds + 59) / 60);
  }
  // YYYY-MM-DDTHH:MM[:SS]Z
  if (text.size() < 17 || text.back() != 'Z' || (text[10] != 'T' && text[10] != ' ')) {
    throw ParseError("invalid timestamp '" + std::string(text) + "'");
  }
  const std::int64_t days = parse_date_or_throw(text.substr(0, 10), text);
  const std::string_view clock = text.substr(11, text.size() - 12);
  int hh = 0, mm = 0, ss = 0;
  bool ok = clock.size() >= 5 && clock[2] == ':' && parse_int(clock.substr(0, 2), hh) &&
            parse_int(clock.substr(3, 2), mm);
  if (ok && clock.size() > 5) {
    ok = clock.size() == 8 && clock[5] == ':' && parse_int(clock.substr(6, 2), ss);
  } else if (ok) {
    ok = clock.size() == 5;
  }
  if (!ok || hh > 23 || mm > 59 || ss > 59 || hh < 0 || mm < 0 || ss < 0) {
    throw ParseError("invalid timestamp '" + std::string(text) + "'");
  }
  return days * kMinutesPerDay + hh * 60 + mm;
}

std::string format_minute(Minute t) {
  const std::int64_t day = day_index(t);
  const auto of_day = static_cast<int>(t - day * kMinutesPerDay);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02dZ", format_date(day).c_str(), of_day / 60,
                of_day % 60);
  return buf;
}

std::int64_t parse_date(std::string_view text) { return parse_date_or_throw(text, text); }

std::string format_date(std::int64_t day) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{days{day}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int parse_time_of_day(std::string_view text) {
  int hh = 0, mm = 0;
  if (text.size() != 5 || text[2] != ':' || !parse_int(text.substr(0, 2), hh) ||
      !parse_int(text.substr(3, 2), mm) || hh < 0 || hh > 24 || mm < 0 || mm > 59 ||
      (hh == 24 && mm != 0)) {
    throw ParseError("invalid time of day '" + std::string(text) + "'");
  }
  return hh * 60 + mm;
}

}  // namespace urbanpulse
