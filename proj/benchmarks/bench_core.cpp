#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "urbanpulse/butterworth.hpp"
#include "urbanpulse/control_chart.hpp"
#include "urbanpulse/deviation_model.hpp"
#include "urbanpulse/forecaster.hpp"
#include "urbanpulse/signature.hpp"
#include "urbanpulse/synth.hpp"

using namespace urbanpulse;

namespace {

const Minute kMonday = parse_minute("2019-03-18T00:00Z");

std::vector<ActivityCube::Count> weeks_of_traffic(int weeks) {
  TrafficProfile p;
  p.services = {{"call4g", 1.0}};
  const auto cube = gen_nominal(p, make_grid({1, 1, 400.0}), kMonday, weeks, 5);
  const auto s = cube.series(0, 0);
  return {s.begin(), s.end()};
}

std::vector<double> normal_sample(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

}  // namespace

static void BM_ChartStep(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> eps(4096);
  for (auto& v : eps) v = d(rng);
  const ChartParams p;
  ChartState s = chart_absorb({}, 0.5, p.half_life);
  std::size_t i = 0;
  for (auto _ : state) {
    auto [next, score] = chart_step(s, eps[i++ & 4095], p);
    s = next;
    benchmark::DoNotOptimize(score);
  }
}
BENCHMARK(BM_ChartStep);

static void BM_DeviationFit(benchmark::State& state) {
  const auto x = normal_sample(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(DeviationModel::fit(x));
}
BENCHMARK(BM_DeviationFit)->Arg(10080)->Arg(40320);

static void BM_DeviationLikelihood(benchmark::State& state) {
  const auto m = DeviationModel::fit(normal_sample(40320));
  double eps = -10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(m.log_exceedance_likelihood(eps));
    eps = eps > 20.0 ? -10.0 : eps + 0.01;
  }
}
BENCHMARK(BM_DeviationLikelihood);

static void BM_FiltfiltWeek(benchmark::State& state) {
  const auto x = normal_sample(kMinutesPerWeek);
  const ButterworthParams params;
  for (auto _ : state) benchmark::DoNotOptimize(filtfilt_circular(x, params));
}
BENCHMARK(BM_FiltfiltWeek);

static void BM_WeeklySignature(benchmark::State& state) {
  const int weeks = static_cast<int>(state.range(0));
  const auto series = weeks_of_traffic(weeks);
  const MinuteRange span{kMonday, kMonday + weeks * kMinutesPerWeek};
  for (auto _ : state) benchmark::DoNotOptimize(compute_weekly_signature(series, span, {}));
}
BENCHMARK(BM_WeeklySignature)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_ForecasterFit(benchmark::State& state) {
  const int weeks = static_cast<int>(state.range(0));
  const auto series = weeks_of_traffic(weeks);
  const MinuteRange span{kMonday, kMonday + weeks * kMinutesPerWeek};
  for (auto _ : state) benchmark::DoNotOptimize(fit_forecaster(series, span, {}));
}
BENCHMARK(BM_ForecasterFit)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
