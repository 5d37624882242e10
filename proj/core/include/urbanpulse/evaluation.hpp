#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanpulse/ground_truth.hpp"
#include "urbanpulse/levels.hpp"

namespace urbanpulse {

struct EventOutcome {
  std::string id;
  bool detectable = true;
  std::size_t alarms = 0;
  bool detected = false;
  std::optional<Minute> first_alarm;
  std::optional<std::int64_t> latency_min;  // first alarm minus event start
};

struct EvaluationReport {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  std::optional<double> precision;      // null when there is no alarm
  std::optional<double> recall_minute;  // null when the mask is empty
  std::optional<double> recall_event;   // null when no event counts
  std::size_t events_counted = 0;
  std::size_t events_detected = 0;
  int min_level = 1;
  int alarms_per_event = 1;
  std::uint64_t evaluated_antenna_minutes = 0;
  std::uint64_t ground_truth_size = 0;
  double noskill_precision = 0.0;
  double noskill_recall = 0.0;
  std::vector<EventOutcome> events;
};

struct ScoreOptions {
  int alarms_per_event = 1;
  // Drop events with no antenna in range from the event-recall denominator.
  bool exclude_undetectable = false;
  // Rate of the No-Skill reference detector; 0 derives it from min_level.
  double noskill_rate = 0.0;
};

struct NoSkillBaseline {
  double precision = 0.0;
  double recall = 0.0;
};

// Random detector alarming at `rate`: precision |GT+| / T, recall rate.
NoSkillBaseline noskill_baselines(std::uint64_t ground_truth_size, std::uint64_t total,
                                  double rate);

// Judges every alarm of level >= min_level inside the grid. Duplicate
// (cell, minute) alarms count once; alarms on cells or minutes outside the
// grid are ignored.
EvaluationReport score_run(std::span<const DetectedAnomaly> alarms, const GroundTruthMask& mask,
                           const EvaluationGrid& grid, int min_level,
                           const ScoreOptions& options = {});

// Alarms whose score crosses the antenna's threshold at `sensitivity`.
std::vector<DetectedAnomaly> select_at_sensitivity(std::span<const DetectedAnomaly> alarms,
                                                   const LevelThresholds& thresholds,
                                                   Sensitivity sensitivity);

struct PrPoint {
  Sensitivity sensitivity = Sensitivity::k4h;
  std::optional<double> precision;
  std::optional<double> recall_minute;
  std::optional<double> recall_event;
};

// Ordered from most to least sensitive. Throws SpecError if a sensitivity
// is missing unless `allow_partial`.
std::vector<PrPoint> pr_curve(const std::map<Sensitivity, EvaluationReport>& runs,
                              bool allow_partial = false);

// `sensitivity,precision,recall_minute,recall_event`; undefined values are
// left empty.
void write_pr_csv(std::ostream& out, std::span<const PrPoint> points);

nlohmann::json report_to_json(const EvaluationReport& report);

// FeatureCollection of alarm points with level, minute and score.
nlohmann::json alarm_map_geojson(std::span<const DetectedAnomaly> alarms,
                                 const CellRegistry& registry,
                                 const std::vector<std::string>& services);

}  // namespace urbanpulse
