#include "urbanpulse/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>
#include <unordered_map>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", *v);
  return buf;
}

}  // namespace

NoSkillBaseline noskill_baselines(std::uint64_t ground_truth_size, std::uint64_t total, double rate) {
  if (total == 0) throw ValidationError("No-Skill baseline needs a non-empty observation period");
  return {static_cast<double>(ground_truth_size) / static_cast<double>(total), rate};
}

EvaluationReport score_run(std::span<const DetectedAnomaly> alarms, const GroundTruthMask& mask,
                           const EvaluationGrid& grid, int min_level, const ScoreOptions& options) {
  EvaluationReport report;
  report.min_level = min_level;
  report.alarms_per_event = options.alarms_per_event;
  report.evaluated_antenna_minutes = grid.antenna_minutes();
  report.ground_truth_size = mask.size_within(grid);

  std::unordered_map<std::string_view, std::size_t> cell_index;
  for (std::size_t c = 0; c < grid.cells.size(); ++c) cell_index.emplace(grid.cells[c], c);

  std::set<std::pair<std::size_t, Minute>> positives;
  for (const auto& a : alarms) {
    if (a.level < min_level) continue;
    const auto it = cell_index.find(a.cell);
    if (it == cell_index.end() || !grid.covers(a.minute)) continue;
    positives.emplace(it->second, a.minute);
  }
  for (const auto& [cell, minute] : positives) {
    if (mask.contains(cell, minute)) {
      ++report.tp;
    } else {
      ++report.fp;
    }
  }
  report.fn = report.ground_truth_size - report.tp;
  report.tn = report.evaluated_antenna_minutes - report.tp - report.fp - report.fn;
  if (report.tp + report.fp > 0) {
    report.precision = static_cast<double>(report.tp) / static_cast<double>(report.tp + report.fp);
  }
  if (report.ground_truth_size > 0) {
    report.recall_minute = static_cast<double>(report.tp) / static_cast<double>(report.ground_truth_size);
  }

  for (const auto& fp : mask.events()) {
    EventOutcome outcome;
    outcome.id = fp.event_id;
    outcome.detectable = fp.detectable;
    const std::set<std::size_t> cells(fp.cells.begin(), fp.cells.end());
    for (const auto& [cell, minute] : positives) {
      if (!cells.count(cell)) continue;
      const bool inside = std::any_of(fp.windows.begin(), fp.windows.end(),
                                      [m = minute](const MinuteRange& r) { return r.contains(m); });
      if (!inside) continue;
      ++outcome.alarms;
      if (!outcome.first_alarm || minute < *outcome.first_alarm) outcome.first_alarm = minute;
    }
    outcome.detected = outcome.alarms >= static_cast<std::size_t>(std::max(options.alarms_per_event, 1));
    if (outcome.first_alarm) outcome.latency_min = *outcome.first_alarm - fp.start;
    if (fp.detectable || !options.exclude_undetectable) {
      ++report.events_counted;
      if (outcome.detected) ++report.events_detected;
    }
    report.events.push_back(std::move(outcome));
  }
  if (report.events_counted > 0) {
    report.recall_event =
        static_cast<double>(report.events_detected) / static_cast<double>(report.events_counted);
  }

  const double rate = options.noskill_rate > 0.0
                          ? options.noskill_rate
                          : sensitivity_frequency(level_sensitivity(std::clamp(min_level, 1, 3)));
  if (report.evaluated_antenna_minutes > 0) {
    const auto base = noskill_baselines(report.ground_truth_size, report.evaluated_antenna_minutes, rate);
    report.noskill_precision = base.precision;
    report.noskill_recall = base.recall;
  }
  return report;
}

std::vector<DetectedAnomaly> select_at_sensitivity(std::span<const DetectedAnomaly> alarms,
                                                   const LevelThresholds& thresholds,
                                                   Sensitivity sensitivity) {
  std::vector<DetectedAnomaly> out;
  for (const auto& a : alarms) {
    const auto* t = thresholds.find(a.cell);
    if (t && t->crosses(a.score, sensitivity)) out.push_back(a);
  }
  return out;
}

std::vector<PrPoint> pr_curve(const std::map<Sensitivity, EvaluationReport>& runs, bool allow_partial) {
  std::vector<PrPoint> points;
  for (const auto s : kAllSensitivities) {
    const auto it = runs.find(s);
    if (it == runs.end()) {
      if (!allow_partial) {
        throw SpecError("PR curve is missing the " + std::string(sensitivity_name(s)) + " run");
      }
      continue;
    }
    points.push_back({s, it->second.precision, it->second.recall_minute, it->second.recall_event});
  }
  return points;
}

void write_pr_csv(std::ostream& out, std::span<const PrPoint> points) {
  out << "sensitivity,precision,recall_minute,recall_event\n";
  for (const auto& p : points) {
    out << sensitivity_name(p.sensitivity) << ',' << csv_number(p.precision) << ','
        << csv_number(p.recall_minute) << ',' << csv_number(p.recall_event) << '\n';
  }
}

json report_to_json(const EvaluationReport& r) {
  json events = json::array();
  for (const auto& e : r.events) {
    events.push_back({{"id", e.id},
                      {"detectable", e.detectable},
                      {"alarms", e.alarms},
                      {"detected", e.detected},
                      {"first_alarm", e.first_alarm ? json(format_minute(*e.first_alarm)) : json(nullptr)},
                      {"latency_min", e.latency_min ? json(*e.latency_min) : json(nullptr)}});
  }
  return {{"confusion", {{"tp", r.tp}, {"fp", r.fp}, {"fn", r.fn}, {"tn", r.tn}}},
          {"precision", optional_number(r.precision)},
          {"recall_minute", optional_number(r.recall_minute)},
          {"recall_event", optional_number(r.recall_event)},
          {"events_counted", r.events_counted},
          {"events_detected", r.events_detected},
          {"min_level", r.min_level},
          {"alarms_per_event", r.alarms_per_event},
          {"evaluated_antenna_minutes", r.evaluated_antenna_minutes},
          {"ground_truth_antenna_minutes", r.ground_truth_size},
          {"noskill", {{"precision", r.noskill_precision}, {"recall", r.noskill_recall}}},
          {"events", events}};
}

json alarm_map_geojson(std::span<const DetectedAnomaly> alarms, const CellRegistry& registry,
                       const std::vector<std::string>& services) {
  json features = json::array();
  for (const auto& a : alarms) {
    const auto* site = registry.find(a.cell);
    if (!site) continue;
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {site->location.lon, site->location.lat}}}},
                        {"properties",
                         {{"cell_id", a.cell},
                          {"minute", format_minute(a.minute)},
                          {"level", a.level},
                          {"score", a.score},
                          {"services", service_label(a.services, services)}}}});
  }
  return {{"type", "FeatureCollection"}, {"features", features}};
}

}  // namespace urbanpulse
