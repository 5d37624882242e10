#include <doctest.h>

#include <cmath>
#include <numeric>

#include "urbanpulse/error.hpp"
#include "urbanpulse/synth.hpp"

using namespace urbanpulse;

namespace {

const Minute kMonday = parse_minute("2019-03-18T00:00Z");

TrafficProfile flat(double rate, NoiseFamily noise = NoiseFamily::kPoisson) {
  TrafficProfile p;
  p.shape = ProfileShape::kFlat;
  p.base_rate_min = rate;
  p.base_rate_max = rate;
  p.weekly_jitter = 0.0;
  p.noise = noise;
  p.services = {{"call4g", 1.0}};
  return p;
}

double mean_of(std::span<const ActivityCube::Count> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

TEST_SUITE("synth_bench") {

TEST_CASE("zero intensity gives zeros") {
  const auto cells = make_grid({1, 3, 400.0});
  const auto cube = gen_nominal(flat(0.0), cells, kMonday, 1, 5);
  for (std::size_t c = 0; c < 3; ++c) {
    for (auto v : cube.series(c, 0)) REQUIRE(v == 0);
  }
}

TEST_CASE("poisson means and variance") {
  const auto cells = make_grid({2, 5, 400.0});
  const auto cube = gen_nominal(flat(10.0), cells, kMonday, 1, 11);
  for (std::size_t c = 0; c < 10; ++c) {
    const auto xs = cube.series(c, 0);
    const double m = mean_of(xs);
    CHECK(m == doctest::Approx(10.0).epsilon(0.05));
    double v = 0;
    for (auto x : xs) v += (x - m) * (x - m);
    CHECK(v / static_cast<double>(xs.size()) == doctest::Approx(10.0).epsilon(0.1));
  }
}

TEST_CASE("negative binomial dispersion") {
  auto p = flat(20.0, NoiseFamily::kNegativeBinomial);
  p.dispersion = 1.5;
  const auto cube = gen_nominal(p, make_grid({1, 1, 400.0}), kMonday, 2, 3);
  const auto xs = cube.series(0, 0);
  const double m = mean_of(xs);
  double v = 0;
  for (auto x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size());
  CHECK(m == doctest::Approx(20.0).epsilon(0.02));
  CHECK(v / m == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("urban shape averages to one and has a daily cycle") {
  double sum = 0;
  for (int i = 0; i < kMinutesPerWeek; ++i) {
    const double w = weekly_shape(ProfileShape::kUrban, i);
    REQUIRE(w > 0.0);
    sum += w;
  }
  CHECK(sum / kMinutesPerWeek == doctest::Approx(1.0).epsilon(1e-6));
  // Tuesday 04:00 is quieter than Tuesday 12:00
  CHECK(weekly_shape(ProfileShape::kUrban, 1440 + 240) < weekly_shape(ProfileShape::kUrban, 1440 + 720));
}

TEST_CASE("same seed gives identical cubes") {
  TrafficProfile p;
  const auto cells = make_grid({2, 2, 400.0});
  CHECK(gen_nominal(p, cells, kMonday, 1, 42) == gen_nominal(p, cells, kMonday, 1, 42));
  CHECK_FALSE(gen_nominal(p, cells, kMonday, 1, 42) == gen_nominal(p, cells, kMonday, 1, 43));
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
}

TEST_CASE("zero magnitude event leaves counts unchanged") {
  const auto cells = make_grid({1, 3, 400.0});
  const auto p = flat(10.0);
  const auto cube = gen_nominal(p, cells, kMonday, 1, 9);
  EventSpec e;
  e.id = "quiet";
  e.magnitude = 0.0;
  e.epicenter = cells.sites()[1].location;
  e.onset = kMonday + 3000;
  const auto r = inject_events(cube, {e}, cells, p, 9);
  CHECK(r.cube == cube);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].id == "quiet");
}

TEST_CASE("kernel at the epicenter") {
  EventSpec e;
  e.magnitude = 10.0;
  e.onset = kMonday + 100;
  e.duration_min = 60;
  CHECK(event_kernel(e, 0.0, e.onset) == doctest::Approx(10.0));
  CHECK(event_kernel(e, 0.0, e.onset - 1) == 0.0);
  CHECK(event_kernel(e, 0.0, e.onset + 60) == 0.0);
  CHECK(event_kernel(e, 0.0, e.onset + 30) == doctest::Approx(10.0 * std::exp(-1.0)));
  CHECK(event_kernel(e, 1000.0, e.onset) == doctest::Approx(10.0 * std::exp(-2.0)));
  e.shape = EventShape::kGradualRamp;
  CHECK(event_kernel(e, 0.0, e.onset) == 0.0);
  CHECK(event_kernel(e, 0.0, e.onset + 30) == doctest::Approx(10.0));
  CHECK(event_kernel(e, 0.0, e.onset + 15) == doctest::Approx(5.0));
}

TEST_CASE("expected count at the epicenter onset") {
  // lambda 10, magnitude 10: E[count] = 10 + 100 = 110. Averaged over many
  // seeds at the same minute.
  const auto cells = make_grid({1, 1, 400.0});
  const auto p = flat(10.0);
  EventSpec e;
  e.id = "jump";
  e.magnitude = 10.0;
  e.epicenter = cells.sites()[0].location;
  e.onset = kMonday + 5000;
  double total = 0;
  const int runs = 200;
  for (int s = 0; s < runs; ++s) {
    const auto cube = gen_nominal(p, cells, kMonday, 1, static_cast<std::uint64_t>(s));
    const auto r = inject_events(cube, {e}, cells, p, static_cast<std::uint64_t>(s));
    REQUIRE(r.injected.at(0, 0, e.onset) == 100);
    total += *r.cube.at(0, 0, e.onset);
  }
  CHECK(total / runs == doctest::Approx(110.0).epsilon(0.01));
}

TEST_CASE("spatial decay, additivity and containment") {
  const auto cells = make_grid({1, 6, 250.0});
  auto p = flat(1000.0);
  const auto nominal = gen_nominal(p, cells, kMonday, 1, 21);
  EventSpec e;
  e.id = "ramp";
  e.shape = EventShape::kGradualRamp;
  e.magnitude = 5.0;
  e.rho_m = 500.0;
  e.epicenter = cells.sites()[0].location;
  e.onset = kMonday + 2000;
  e.duration_min = 120;
  e.gt_radius_m = 600.0;
  const auto r = inject_events(nominal, {e}, cells, p, 21);
  const Minute peak = e.onset + 60;
  const double at0 = *r.injected.at(0, 0, peak);
  for (std::size_t c = 1; c < 6; ++c) {
    const double d = haversine_m(cells.sites()[0].location, cells.sites()[c].location);
    CHECK(*r.injected.at(c, 0, peak) / at0 == doctest::Approx(std::exp(-d / e.rho_m)).epsilon(0.01));
  }
  // cube minus injected is the nominal cube everywhere
  for (std::size_t c = 0; c < 6; ++c) {
    const auto a = r.cube.series(c, 0), b = r.injected.series(c, 0), n = nominal.series(c, 0);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] - b[i] == n[i]);
  }
  // the largest injection falls inside the recorded event window and radius
  std::size_t best_c = 0;
  Minute best_t = 0;
  int best = -1;
  for (std::size_t c = 0; c < 6; ++c) {
    for (Minute t = r.cube.span().begin; t < r.cube.span().end; ++t) {
      if (*r.injected.at(c, 0, t) > best) {
        best = *r.injected.at(c, 0, t);
        best_c = c;
        best_t = t;
      }
    }
  }
  REQUIRE(r.events.size() == 1);
  const auto w = r.events[0].windows();
  CHECK(w[0].contains(best_t));
  CHECK(haversine_m(cells.sites()[best_c].location, r.events[0].epicenters[0]) <= *r.events[0].radius_m);
  CHECK(r.events[0].end == e.onset + 119);
}

TEST_CASE("injection skips missing slots") {
  const auto cells = make_grid({1, 1, 400.0});
  const auto p = flat(10.0);
  EventSpec e;
  e.id = "gap";
  e.epicenter = cells.sites()[0].location;
  e.onset = kMonday + 100;
  const auto holed = gen_nominal(p, cells, kMonday, 1, 2).without({kMonday + 90, kMonday + 130});
  const auto r = inject_events(holed, {e}, cells, p, 2);
  CHECK_FALSE(r.cube.at(0, 0, kMonday + 110).has_value());
  CHECK(*r.cube.at(0, 0, kMonday + 130) > *holed.at(0, 0, kMonday + 130));
}

TEST_CASE("invalid events") {
  const auto cells = make_grid({1, 1, 400.0});
  const auto p = flat(10.0);
  const auto cube = gen_nominal(p, cells, kMonday, 1, 2);
  EventSpec e;
  e.id = "bad";
  e.epicenter = cells.sites()[0].location;
  e.onset = kMonday + 100;
  e.magnitude = -1;
  CHECK_THROWS_AS(inject_events(cube, {e}, cells, p, 2), ValidationError);
  e.magnitude = 2;
  e.onset = kMonday + kMinutesPerWeek - 10;
  CHECK_THROWS_AS(inject_events(cube, {e}, cells, p, 2), SpecError);
  e.onset = kMonday + 100;
  e.epicenter = {40.0, 3.0};
  CHECK(inject_events(cube, {e}, cells, p, 2).warnings.size() == 1);
}

TEST_CASE("random events stay inside the span") {
  const auto cells = make_grid({5, 10, 400.0});
  RandomEventParams params;
  const MinuteRange span{kMonday, kMonday + 4 * kMinutesPerWeek};
  const auto a = random_events(params, cells, span, 400.0, 8);
  const auto b = random_events(params, cells, span, 400.0, 8);
  REQUIRE(a.size() == 30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].onset == b[i].onset);
    CHECK(a[i].onset >= span.begin + params.margin_min);
    CHECK(a[i].onset + a[i].duration_min <= span.end - params.margin_min);
    CHECK(a[i].magnitude >= 5.0);
    CHECK(a[i].magnitude <= 10.0);
  }
}

TEST_CASE("scenario file") {
  const auto sc = parse_scenario(nlohmann::json::parse(R"({
    "seed": 4, "start": "2019-03-18T00:00Z", "weeks": 1,
    "grid": {"rows": 1, "cols": 2, "spacing_m": 300},
    "profile": {"shape": "flat", "base_rate_min": 3, "base_rate_max": 3, "noise": "poisson",
                "services": [{"name": "sms4g", "share": 1}]},
    "events": [{"id": "e1", "shape": "jump_decay", "magnitude": 4, "epicenter": {"lat": 48.853, "lon": 2.3499},
                "onset": "2019-03-19T10:00Z", "duration_min": 60}]
  })"));
  CHECK(sc.weeks == 1);
  const auto out = generate_scenario(sc);
  CHECK(out.cells.size() == 2);
  CHECK(out.activity.services() == std::vector<std::string>{"sms4g"});
  CHECK(out.events.size() == 1);
  CHECK(generate_scenario(sc).activity == out.activity);
}

}  // TEST_SUITE
