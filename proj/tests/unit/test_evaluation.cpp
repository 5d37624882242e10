#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "urbanpulse/dbue.hpp"
#include "urbanpulse/error.hpp"
#include "urbanpulse/evaluation.hpp"
#include "urbanpulse/ground_truth.hpp"
#include "urbanpulse/synth.hpp"

using namespace urbanpulse;
using nlohmann::json;

#ifndef URBANPULSE_DATA_DIR
#define URBANPULSE_DATA_DIR "data"
#endif

namespace {

const Minute kT0 = parse_minute("2019-04-15T00:00Z");

UncommonEvent point_event(std::string id, GeoPoint where, Minute start, std::optional<Minute> end = {}) {
  UncommonEvent e;
  e.id = std::move(id);
  e.epicenters = {where};
  e.start = start;
  e.end = end;
  return e;
}

DetectedAnomaly alarm(std::string cell, Minute t, int level = 1) { return {std::move(cell), t, level, -10.0, 1}; }

}  // namespace

TEST_SUITE("evaluation_harness") {

TEST_CASE("dbue record validation") {
  const json doc = json::parse(R"([
    {"id": "ok", "epicenters": [{"lat": 48.85, "lon": 2.35}], "start": "2019-04-15T10:00Z", "end": "2019-04-15T12:00Z"},
    {"id": "backwards", "epicenters": [{"lat": 48.85, "lon": 2.35}], "start": "2019-04-15T10:00Z", "end": "2019-04-15T09:00Z"},
    {"id": "nowhere", "epicenters": [], "start": "2019-04-15T10:00Z"},
    {"id": "badradius", "epicenters": [{"lat": 48.85, "lon": 2.35}], "start": "2019-04-15T10:00Z", "radius_m": -3},
    {"epicenters": [{"lat": 48.85, "lon": 2.35}], "start": "2019-04-15T10:00Z"}
  ])");
  const auto r = parse_dbue(doc);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].id == "ok");
  REQUIRE(r.rejected.size() == 4);
  CHECK(r.rejected[0].id == "backwards");
  CHECK(r.rejected[0].index == 1);
}

TEST_CASE("tolerance windows") {
  auto concert = point_event("c", {48.85, 2.35}, kT0 + 600, kT0 + 720);
  concert.pre_buffer_min = 30;
  concert.post_buffer_min = 15;
  // inclusive [start - pre, end + post]
  CHECK(concert.windows() == std::vector<MinuteRange>{{kT0 + 570, kT0 + 736}});
  const auto sudden = point_event("s", {48.85, 2.35}, kT0 + 600);
  CHECK(sudden.windows() == std::vector<MinuteRange>{{kT0 + 600, kT0 + 616}});
  auto days = point_event("d", {48.85, 2.35}, kT0);
  days.days = {{day_index(kT0), 9 * 60, 20 * 60}, {day_index(kT0) + 1, 9 * 60, 20 * 60}};
  CHECK(days.windows() ==
        std::vector<MinuteRange>{{kT0 + 540, kT0 + 1201}, {kT0 + 1440 + 540, kT0 + 1440 + 1201}});
}

TEST_CASE("shipped sample database") {
  const auto r = load_dbue(std::string(URBANPULSE_DATA_DIR) + "/sample_dbue.json");
  CHECK(r.events.size() == 10);
  CHECK(r.rejected.empty());
  // serializing and parsing again gives the same windows
  const auto again = parse_dbue(dbue_to_json(r.events));
  REQUIRE(again.events.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(again.events[i].windows() == r.events[i].windows());
}

TEST_CASE("multi-epicenter event is one event with the union of footprints") {
  const CellRegistry reg({{"a", {48.8500, 2.3000}}, {"b", {48.8500, 2.4000}}, {"c", {48.9000, 2.3500}}});
  UncommonEvent marathon;
  marathon.id = "m";
  marathon.epicenters = {{48.8500, 2.3000}, {48.8500, 2.4000}};
  marathon.start = kT0;
  marathon.end = kT0 + 60;
  const auto mask = expand_ground_truth({marathon}, reg, {"a", "b", "c"});
  REQUIRE(mask.events().size() == 1);
  CHECK(mask.events()[0].cells == std::vector<std::size_t>{0, 1});
  CHECK(mask.contains(0, kT0 + 30));
  CHECK(mask.contains(1, kT0 + 60));
  CHECK_FALSE(mask.contains(2, kT0 + 30));
  CHECK_FALSE(mask.contains(0, kT0 + 61));
}

TEST_CASE("radius boundary") {
  const GeoPoint origin{48.8530, 2.3499};
  const CellRegistry reg({{"at", origin}, {"far", offset_m(origin, 301.0, 0.0)}, {"near", offset_m(origin, 299.0, 0.0)}});
  REQUIRE(haversine_m(origin, reg.find("far")->location) == doctest::Approx(301.0).epsilon(1e-3));
  const auto mask = expand_ground_truth({point_event("e", origin, kT0)}, reg, {"at", "far", "near"});
  CHECK(mask.events()[0].cells == std::vector<std::size_t>{0, 2});
}

TEST_CASE("mask matches an exhaustive haversine check") {
  std::vector<CellSite> sites;
  std::vector<std::string> ids;
  const GeoPoint origin{48.84, 2.30};
  for (int r = 0; r < 20; ++r) {
    for (int c = 0; c < 20; ++c) {
      ids.push_back("g" + std::to_string(r * 20 + c));
      sites.push_back({ids.back(), offset_m(origin, 100.0 * r, 100.0 * c)});
    }
  }
  const CellRegistry reg(sites);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-200.0, 2100.0);
  std::vector<UncommonEvent> events;
  for (int i = 0; i < 25; ++i) {
    auto e = point_event("e" + std::to_string(i), offset_m(origin, u(rng), u(rng)), kT0 + 100 * i);
    e.radius_m = 250.0;
    events.push_back(e);
  }
  const auto mask = expand_ground_truth(events, reg, ids);
  for (std::size_t i = 0; i < events.size(); ++i) {
    std::vector<std::size_t> brute;
    for (std::size_t c = 0; c < sites.size(); ++c) {
      // haversine written out independently
      const double rad = std::numbers::pi / 180.0;
      const double dlat = (sites[c].location.lat - events[i].epicenters[0].lat) * rad;
      const double dlon = (sites[c].location.lon - events[i].epicenters[0].lon) * rad;
      const double a = std::pow(std::sin(dlat / 2), 2) + std::cos(sites[c].location.lat * rad) *
                                                             std::cos(events[i].epicenters[0].lat * rad) *
                                                             std::pow(std::sin(dlon / 2), 2);
      if (2 * 6371008.8 * std::asin(std::sqrt(a)) <= 250.0) brute.push_back(c);
    }
    CHECK(mask.events()[i].cells == brute);
  }
}

TEST_CASE("event with no antenna in range") {
  const CellRegistry reg({{"a", {48.85, 2.35}}});
  std::vector<std::string> warnings;
  const auto mask = expand_ground_truth({point_event("lost", {45.0, 5.0}, kT0)}, reg, {"a"}, {}, &warnings);
  CHECK_FALSE(mask.events()[0].detectable);
  CHECK(warnings.size() == 1);
  const EvaluationGrid grid{{"a"}, {{kT0, kT0 + 1000}}};
  ScoreOptions keep;
  CHECK(score_run({}, mask, grid, 1, keep).recall_event == 0.0);
  ScoreOptions drop;
  drop.exclude_undetectable = true;
  CHECK_FALSE(score_run({}, mask, grid, 1, drop).recall_event.has_value());
}

TEST_CASE("singleton run") {
  const CellRegistry reg({{"a", {48.85, 2.35}}, {"b", {48.90, 2.35}}});
  const auto mask = expand_ground_truth({point_event("u", {48.85, 2.35}, kT0 + 100, kT0 + 200)}, reg, {"a", "b"});
  const EvaluationGrid grid{{"a", "b"}, {{kT0, kT0 + 1440}}};
  const std::vector<DetectedAnomaly> alarms{alarm("a", kT0 + 150)};
  const auto r = score_run(alarms, mask, grid, 1);
  CHECK(r.precision == 1.0);
  CHECK(r.recall_event == 1.0);
  CHECK(r.tp == 1);
  CHECK(r.fn == 100);
  CHECK(r.tp + r.fp + r.fn + r.tn == 2 * 1440);
  CHECK(r.events[0].latency_min == 50);
  // alarms below the level, outside the grid or on unknown cells are ignored
  const std::vector<DetectedAnomaly> noise{alarm("a", kT0 + 150, 0), alarm("a", kT0 + 5000), alarm("zz", kT0 + 150)};
  const auto q = score_run(noise, mask, grid, 1);
  CHECK_FALSE(q.precision.has_value());
  CHECK(q.tp + q.fp == 0);
}

TEST_CASE("overlapping events count a shared alarm once") {
  const CellRegistry reg({{"a", {48.85, 2.35}}});
  const auto mask = expand_ground_truth(
      {point_event("x", {48.85, 2.35}, kT0 + 100, kT0 + 200), point_event("y", {48.85, 2.35}, kT0 + 150, kT0 + 300)}, reg,
      {"a"});
  const EvaluationGrid grid{{"a"}, {{kT0, kT0 + 1440}}};
  const std::vector<DetectedAnomaly> alarms{alarm("a", kT0 + 160), alarm("a", kT0 + 160)};
  const auto r = score_run(alarms, mask, grid, 1);
  CHECK(r.tp == 1);
  CHECK(r.events_detected == 2);
  CHECK(mask.size_within(grid) == 201);
}

TEST_CASE("alarms per event") {
  const CellRegistry reg({{"a", {48.85, 2.35}}});
  const auto mask = expand_ground_truth({point_event("u", {48.85, 2.35}, kT0 + 100, kT0 + 200)}, reg, {"a"});
  const EvaluationGrid grid{{"a"}, {{kT0, kT0 + 1440}}};
  const std::vector<DetectedAnomaly> alarms{alarm("a", kT0 + 150), alarm("a", kT0 + 151)};
  ScoreOptions three;
  three.alarms_per_event = 3;
  CHECK(score_run(alarms, mask, grid, 1, three).recall_event == 0.0);
  ScoreOptions two;
  two.alarms_per_event = 2;
  CHECK(score_run(alarms, mask, grid, 1, two).recall_event == 1.0);
}

TEST_CASE("no-skill arithmetic") {
  const auto b = noskill_baselines(1000, 100000, 1.0 / 240);
  CHECK(b.precision == doctest::Approx(0.01));
  CHECK(b.recall == doctest::Approx(1.0 / 240));
  CHECK(noskill_baselines(0, 100000, 1.0 / 240).precision == 0.0);
  CHECK_THROWS_AS(noskill_baselines(0, 0, 0.1), ValidationError);
}

TEST_CASE("random detector matches the no-skill closed forms") {
  const CellRegistry reg = make_grid({4, 5, 400.0, {48.85, 2.35}});
  std::vector<std::string> ids;
  for (const auto& s : reg.sites()) ids.push_back(s.id);
  const EvaluationGrid grid{ids, {{kT0, kT0 + 7 * kMinutesPerDay}}};
  std::mt19937_64 rng(41);
  std::vector<UncommonEvent> events;
  for (int i = 0; i < 12; ++i) {
    const auto& s = reg.sites()[static_cast<std::size_t>(i) % reg.size()];
    events.push_back(point_event("e" + std::to_string(i), s.location, kT0 + 500 * i + 7, kT0 + 500 * i + 400));
  }
  const auto mask = expand_ground_truth(events, reg, ids);
  const double rate = 1.0 / 240;
  std::bernoulli_distribution fire(rate);
  std::vector<DetectedAnomaly> alarms;
  for (const auto& id : ids) {
    for (Minute t = grid.ranges[0].begin; t < grid.ranges[0].end; ++t) {
      if (fire(rng)) alarms.push_back(alarm(id, t));
    }
  }
  const auto r = score_run(alarms, mask, grid, 1);
  const double p = static_cast<double>(r.ground_truth_size) / static_cast<double>(r.evaluated_antenna_minutes);
  CHECK(r.noskill_precision == doctest::Approx(p));
  CHECK(r.noskill_recall == doctest::Approx(rate));
  const double n_alarms = static_cast<double>(r.tp + r.fp);
  CHECK(std::abs(*r.precision - p) < 3 * std::sqrt(p * (1 - p) / n_alarms));
  const double gt = static_cast<double>(r.ground_truth_size);
  CHECK(std::abs(*r.recall_minute - rate) < 3 * std::sqrt(rate * (1 - rate) / gt));
}

TEST_CASE("pr curve from nested selections") {
  const CellRegistry reg({{"a", {48.85, 2.35}}});
  const auto mask = expand_ground_truth({point_event("u", {48.85, 2.35}, kT0 + 100, kT0 + 400)}, reg, {"a"});
  const EvaluationGrid grid{{"a"}, {{kT0, kT0 + 20000}}};
  // scores uniform in the grid, lower inside the event
  std::vector<double> train;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 0);
  for (int i = 0; i < 20000; ++i) train.push_back(u(rng));
  LevelThresholds th;
  th.antennas["a"] = calibrate_antenna(train);
  std::vector<DetectedAnomaly> alarms;
  for (Minute t = kT0; t < kT0 + 20000; ++t) {
    const double s = u(rng) - (mask.contains(0, t) ? 0.4 : 0.0);
    if (th.antennas["a"].crosses(s, Sensitivity::k4h)) alarms.push_back({"a", t, assign_level(s, th.antennas["a"]), s, 1});
  }
  std::map<Sensitivity, EvaluationReport> runs;
  std::vector<std::size_t> sizes;
  for (const auto s : kAllSensitivities) {
    const auto sel = select_at_sensitivity(alarms, th, s);
    sizes.push_back(sel.size());
    runs.emplace(s, score_run(sel, mask, grid, 1));
  }
  const auto curve = pr_curve(runs);
  REQUIRE(curve.size() == 6);
  for (std::size_t i = 1; i < 6; ++i) {
    CHECK(sizes[i] <= sizes[i - 1]);
    CHECK(curve[i].recall_minute.value_or(0) <= curve[i - 1].recall_minute.value_or(0));
    CHECK(curve[i].recall_event.value_or(0) <= curve[i - 1].recall_event.value_or(0));
  }
  // points equal an independent score_run per threshold
  for (std::size_t i = 0; i < 6; ++i) {
    const auto again = score_run(select_at_sensitivity(alarms, th, curve[i].sensitivity), mask, grid, 1);
    CHECK(curve[i].precision == again.precision);
    CHECK(curve[i].recall_minute == again.recall_minute);
  }
  runs.erase(Sensitivity::k2d);
  CHECK_THROWS_AS(pr_curve(runs), SpecError);
  CHECK(pr_curve(runs, true).size() == 5);

  std::ostringstream csv;
  write_pr_csv(csv, curve);
  CHECK(csv.str().rfind("sensitivity,precision,recall_minute,recall_event\n4h,", 0) == 0);
}

TEST_CASE("undefined precision is left empty in the csv") {
  std::vector<PrPoint> points{{Sensitivity::k1w, std::nullopt, 0.0, 0.0}};
  std::ostringstream csv;
  write_pr_csv(csv, points);
  CHECK(csv.str() == "sensitivity,precision,recall_minute,recall_event\n1w,,0,0\n");
}

TEST_CASE("report json and alarm map") {
  const CellRegistry reg({{"a", {48.85, 2.35}}});
  const auto mask = expand_ground_truth({point_event("u", {48.85, 2.35}, kT0 + 100, kT0 + 200)}, reg, {"a"});
  const EvaluationGrid grid{{"a"}, {{kT0, kT0 + 1440}}};
  const std::vector<DetectedAnomaly> alarms{alarm("a", kT0 + 150), alarm("a", kT0 + 900)};
  const auto j = report_to_json(score_run(alarms, mask, grid, 1));
  CHECK(j["confusion"]["tp"] == 1);
  CHECK(j["confusion"]["fp"] == 1);
  CHECK(j["precision"] == 0.5);
  const auto g = alarm_map_geojson(alarms, reg, {"call4g"});
  CHECK(g["type"] == "FeatureCollection");
  CHECK(g["features"].size() == 2);
  CHECK(g["features"][0]["geometry"]["coordinates"][0] == 2.35);
  CHECK(g["features"][0]["properties"]["services"] == "call4g");
}

TEST_CASE("score_run is pure") {
  const CellRegistry reg({{"a", {48.85, 2.35}}, {"b", {48.86, 2.35}}});
  const auto mask = expand_ground_truth({point_event("u", {48.85, 2.35}, kT0 + 100, kT0 + 200)}, reg, {"a", "b"});
  const EvaluationGrid grid{{"a", "b"}, {{kT0, kT0 + 1440}}};
  const std::vector<DetectedAnomaly> alarms{alarm("b", kT0 + 3), alarm("a", kT0 + 150)};
  CHECK(report_to_json(score_run(alarms, mask, grid, 1)) == report_to_json(score_run(alarms, mask, grid, 1)));
}

}  // TEST_SUITE
