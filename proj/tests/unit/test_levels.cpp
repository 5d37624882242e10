#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "urbanpulse/error.hpp"
#include "urbanpulse/levels.hpp"

using namespace urbanpulse;

namespace {

std::vector<double> uniform_scores(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-30.0, 0.0);
  std::vector<double> out(n);
  for (auto& v : out) v = u(rng);
  return out;
}

std::size_t count_crossing(const std::vector<double>& scores, const AntennaThresholds& t, Sensitivity s) {
  return static_cast<std::size_t>(std::count_if(scores.begin(), scores.end(), [&](double x) { return t.crosses(x, s); }));
}

}  // namespace

TEST_SUITE("level_calibration") {

TEST_CASE("sensitivity periods and names") {
  CHECK(sensitivity_period(Sensitivity::k4h) == 240);
  CHECK(sensitivity_period(Sensitivity::k1w) == 10080);
  CHECK(sensitivity_frequency(Sensitivity::k1d) == 1.0 / 1440);
  for (const auto s : kAllSensitivities) CHECK(parse_sensitivity(sensitivity_name(s)) == s);
  CHECK_THROWS_AS(parse_sensitivity("3h"), ParseError);
  CHECK(level_sensitivity(1) == Sensitivity::k4h);
  CHECK(level_sensitivity(2) == Sensitivity::k1d);
  CHECK(level_sensitivity(3) == Sensitivity::k1w);
}

TEST_CASE("one week of training minutes: the weekly threshold is the rarest score") {
  auto scores = uniform_scores(10080, 1);
  const auto t = calibrate_antenna(scores);
  REQUIRE(t.calibrated);
  CHECK(t.threshold(Sensitivity::k1w) == *std::min_element(scores.begin(), scores.end()));
  std::sort(scores.begin(), scores.end());
  CHECK(t.threshold(Sensitivity::k4h) == scores[41]);  // ceil(10080 / 240) = 42nd smallest
  CHECK(t.threshold(Sensitivity::k1d) == scores[6]);
}

TEST_CASE("training minutes crossing each threshold equal ceil(N f)") {
  const auto scores = uniform_scores(40000, 2);
  const auto t = calibrate_antenna(scores);
  for (const auto s : kAllSensitivities) {
    const auto expect = static_cast<std::size_t>(std::ceil(40000.0 * sensitivity_frequency(s)));
    CHECK(count_crossing(scores, t, s) == expect);
  }
}

TEST_CASE("ties never admit more than the target count") {
  std::vector<double> scores(20000, -1.0);
  for (std::size_t i = 0; i < 50; ++i) scores[i] = -10.0 - static_cast<double>(i);  // 50 distinct rare scores
  for (std::size_t i = 50; i < 150; ++i) scores[i] = -5.0;                         // a block of ties
  const auto t = calibrate_antenna(scores);
  REQUIRE(t.calibrated);
  // ceil(20000/240) = 84 would land inside the tie block: drop below it
  CHECK(t.threshold(Sensitivity::k4h) == -10.0);
  CHECK(count_crossing(scores, t, Sensitivity::k4h) == 50);
  CHECK(rare_end_quantile(std::vector<double>{1.0, 1.0, 1.0, 2.0}, 0.5) == kNoThreshold);
}

TEST_CASE("held-out uniform scores alarm at the target rate") {
  const auto train = uniform_scores(100000, 3);
  const auto test = uniform_scores(100000, 4);
  const auto t = calibrate_antenna(train);
  const double rate = static_cast<double>(count_crossing(test, t, Sensitivity::k4h)) / test.size();
  CHECK(rate == doctest::Approx(1.0 / 240).epsilon(0.25));
}

TEST_CASE("resampled training scores emit level 1 or more at 1/240") {
  const auto train = uniform_scores(20160, 5);
  const auto t = calibrate_antenna(train);
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
  std::size_t alarms = 0;
  const std::size_t draws = 400000;
  for (std::size_t i = 0; i < draws; ++i) alarms += assign_level(train[pick(rng)], t) >= 1 ? 1 : 0;
  const double expect = std::ceil(20160.0 / 240) / 20160.0;
  CHECK(static_cast<double>(alarms) / draws == doctest::Approx(expect).epsilon(0.05));
}

TEST_CASE("degenerate and short training") {
  const auto flat = calibrate_antenna(std::vector<double>(20000, -3.0));
  CHECK_FALSE(flat.calibrated);
  CHECK(assign_level(-1e9, flat) == 0);
  const auto short_run = calibrate_antenna(uniform_scores(5000, 7));
  CHECK_FALSE(short_run.calibrated);
  CHECK(short_run.training_minutes == 5000);
  CHECK(assign_level(-1e9, short_run) == 0);
}

TEST_CASE("level assignment") {
  const auto t = calibrate_antenna(uniform_scores(30000, 8));
  CHECK(assign_level(t.threshold(Sensitivity::k1w) - 1.0, t) == 3);
  CHECK(assign_level(t.threshold(Sensitivity::k4h), t) == 1);
  CHECK(assign_level(std::nextafter(t.threshold(Sensitivity::k4h), 1.0), t) == 0);
  CHECK(assign_level(t.threshold(Sensitivity::k1d), t) == 2);
  // nesting of thresholds
  for (std::size_t i = 1; i < 6; ++i) CHECK(t.log_threshold[i] <= t.log_threshold[i - 1]);
}

TEST_CASE("per-antenna calibration makes rates scale-free") {
  std::map<std::string, std::vector<double>> scores;
  auto base = uniform_scores(20160, 9);
  scores["quiet"] = base;
  for (auto& v : base) v *= 1000.0;
  scores["busy"] = base;
  scores["none"] = {};
  const auto all = calibrate_thresholds(scores);
  CHECK(all.antennas.size() == 2);
  CHECK(all.find("none") == nullptr);
  CHECK(count_crossing(scores["quiet"], *all.find("quiet"), Sensitivity::k4h) ==
        count_crossing(scores["busy"], *all.find("busy"), Sensitivity::k4h));
}

}  // TEST_SUITE
