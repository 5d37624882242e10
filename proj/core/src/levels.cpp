#include "urbanpulse/levels.hpp"

#include <algorithm>
#include <cmath>

#include "urbanpulse/error.hpp"

namespace urbanpulse {

std::int64_t sensitivity_period(Sensitivity s) {
  switch (s) {
    case Sensitivity::k4h: return 4 * kMinutesPerHour;
    case Sensitivity::k8h: return 8 * kMinutesPerHour;
    case Sensitivity::k12h: return 12 * kMinutesPerHour;
    case Sensitivity::k1d: return kMinutesPerDay;
    case Sensitivity::k2d: return 2 * kMinutesPerDay;
    case Sensitivity::k1w: return kMinutesPerWeek;
  }
  return kMinutesPerWeek;
}

std::string_view sensitivity_name(Sensitivity s) {
  switch (s) {
    case Sensitivity::k4h: return "4h";
    case Sensitivity::k8h: return "8h";
    case Sensitivity::k12h: return "12h";
    case Sensitivity::k1d: return "1d";
    case Sensitivity::k2d: return "2d";
    case Sensitivity::k1w: return "1w";
  }
  return "?";
}

Sensitivity parse_sensitivity(std::string_view text) {
  for (const auto s : kAllSensitivities) {
    if (sensitivity_name(s) == text) return s;
  }
  throw ParseError("unknown sensitivity '" + std::string(text) + "' (expected 4h|8h|12h|1d|2d|1w)");
}

Sensitivity level_sensitivity(int level) {
  switch (level) {
    case 1: return Sensitivity::k4h;
    case 2: return Sensitivity::k1d;
    case 3: return Sensitivity::k1w;
    default: throw ValidationError("level must be 1, 2 or 3");
  }
}

double rare_end_quantile(std::span<const double> sorted, double frequency) {
  if (sorted.empty()) return kNoThreshold;
  const auto n = static_cast<double>(sorted.size());
  const auto k = static_cast<std::size_t>(
      std::clamp(std::ceil(n * frequency - 1e-9), 1.0, n));
  const double candidate = sorted[k - 1];
  const auto past = std::upper_bound(sorted.begin(), sorted.end(), candidate);
  if (static_cast<std::size_t>(past - sorted.begin()) <= k) return candidate;
  const auto lo = std::lower_bound(sorted.begin(), sorted.end(), candidate);
  if (lo == sorted.begin()) return kNoThreshold;
  return *(lo - 1);
}

AntennaThresholds calibrate_antenna(std::vector<double> scores, const CalibrationParams& params) {
  AntennaThresholds out;
  out.training_minutes = scores.size();
  if (scores.empty() || scores.size() < params.min_training_minutes) return out;
  std::sort(scores.begin(), scores.end());
  if (scores.front() == scores.back()) return out;
  out.calibrated = true;
  for (const auto s : kAllSensitivities) {
    out.log_threshold[static_cast<std::size_t>(s)] = rare_end_quantile(scores, sensitivity_frequency(s));
  }
  return out;
}

LevelThresholds calibrate_thresholds(const std::map<std::string, std::vector<double>>& scores,
                                     const CalibrationParams& params) {
  LevelThresholds out;
  for (const auto& [cell, series] : scores) {
    if (series.empty()) continue;
    out.antennas.emplace(cell, calibrate_antenna(series, params));
  }
  return out;
}

int assign_level(double score, const AntennaThresholds& thresholds) {
  if (!thresholds.calibrated) return 0;
  for (int level = 3; level >= 1; --level) {
    if (thresholds.crosses(score, level_sensitivity(level))) return level;
  }
  return 0;
}

}  // namespace urbanpulse
