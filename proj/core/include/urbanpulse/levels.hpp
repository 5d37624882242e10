#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urbanpulse/fusion.hpp"
#include "urbanpulse/time.hpp"

namespace urbanpulse {

// Target exceedance frequencies, from most to least sensitive. Level 1, 2
// and 3 are the 4h, 1d and 1w thresholds; the others only serve PR curves.
enum class Sensitivity { k4h = 0, k8h, k12h, k1d, k2d, k1w };

inline constexpr std::array<Sensitivity, 6> kAllSensitivities = {
    Sensitivity::k4h, Sensitivity::k8h, Sensitivity::k12h,
    Sensitivity::k1d, Sensitivity::k2d, Sensitivity::k1w};

// Mean number of monitored minutes between two exceedances.
std::int64_t sensitivity_period(Sensitivity s);
inline double sensitivity_frequency(Sensitivity s) {
  return 1.0 / static_cast<double>(sensitivity_period(s));
}
std::string_view sensitivity_name(Sensitivity s);
// "4h", "8h", "12h", "1d", "2d", "1w". Throws ParseError.
Sensitivity parse_sensitivity(std::string_view text);
// Canonical sensitivity of level 1..3.
Sensitivity level_sensitivity(int level);

inline constexpr double kNoThreshold = -std::numeric_limits<double>::infinity();

// Thresholds of one antenna on the fused log-likelihood score (lower is
// rarer). A score crosses a threshold when score <= threshold.
struct AntennaThresholds {
  bool calibrated = false;
  std::size_t training_minutes = 0;
  std::array<double, 6> log_threshold{kNoThreshold, kNoThreshold, kNoThreshold,
                                      kNoThreshold, kNoThreshold, kNoThreshold};

  double threshold(Sensitivity s) const { return log_threshold[static_cast<std::size_t>(s)]; }
  bool crosses(double score, Sensitivity s) const { return calibrated && score <= threshold(s); }
};

struct CalibrationParams {
  std::size_t min_training_minutes = kMinutesPerWeek;
};

// Threshold for frequency f over N scores: the ceil(N f)-th smallest score.
// If ties at that value would admit more than ceil(N f) minutes, the
// threshold drops to the next smaller distinct score (kNoThreshold when none).
double rare_end_quantile(std::span<const double> sorted_scores, double frequency);

// One antenna. Un-calibratable (too few scores, or all identical) yields
// calibrated == false, which forces level 0.
AntennaThresholds calibrate_antenna(std::vector<double> training_scores,
                                    const CalibrationParams& params = {});

struct LevelThresholds {
  std::map<std::string, AntennaThresholds> antennas;

  const AntennaThresholds* find(const std::string& cell) const {
    const auto it = antennas.find(cell);
    return it == antennas.end() ? nullptr : &it->second;
  }
};

// Antennas with no training score are left out and therefore inactive.
LevelThresholds calibrate_thresholds(const std::map<std::string, std::vector<double>>& scores,
                                     const CalibrationParams& params = {});

// Highest canonical level whose threshold the score crosses (0 when none or
// when the antenna is un-calibrated).
int assign_level(double score, const AntennaThresholds& thresholds);

struct DetectedAnomaly {
  std::string cell;
  Minute minute = 0;
  int level = 0;
  double score = 0.0;  // natural log of the fused likelihood
  ServiceMask services = 0;
};

}  // namespace urbanpulse
