#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <boost/math/special_functions/digamma.hpp>

#include "urbanpulse/butterworth.hpp"
#include "urbanpulse/deviation_model.hpp"
#include "urbanpulse/error.hpp"
#include "urbanpulse/fusion.hpp"
#include "urbanpulse/signature.hpp"

using namespace urbanpulse;

namespace {

const Minute kMon = parse_minute("2019-04-15T00:00Z");

// Direct evaluation of the cascade's frequency response.
double cascade_power_gain(const std::vector<Biquad>& sections, double f) {
  const double w = 2.0 * std::numbers::pi * f;
  std::complex<double> h = 1.0;
  const std::complex<double> z1 = std::polar(1.0, -w), z2 = std::polar(1.0, -2.0 * w);
  for (const auto& s : sections) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
  return std::norm(h);
}

std::vector<double> normal_sample(std::size_t n, double mean, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(mean, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = d(rng);
  return out;
}

// Survival by exhaustive counting.
double count_at_least(const std::vector<double>& sample, double x) {
  return static_cast<double>(std::count_if(sample.begin(), sample.end(), [x](double v) { return v >= x; })) /
         static_cast<double>(sample.size());
}

}  // namespace

TEST_SUITE("signature_detector") {

TEST_CASE("designed filter matches the closed-form Butterworth gain") {
  for (int order : {1, 2, 3, 4, 6}) {
    const ButterworthParams p{order, 1.0 / 120.0};
    const auto sections = design_butterworth_lowpass(p);
    for (double f : {0.0, 1.0 / 10080, 1.0 / 1440, 1.0 / 240, 1.0 / 120, 1.0 / 60, 0.01, 0.1, 0.3}) {
      const double closed = 1.0 / (1.0 + std::pow(std::tan(std::numbers::pi * f) / std::tan(std::numbers::pi / 120.0),
                                                  2.0 * order));
      CHECK(std::sqrt(cascade_power_gain(sections, f)) == doctest::Approx(std::sqrt(closed)).epsilon(1e-9));
      CHECK(butterworth_power_gain(f, p) == doctest::Approx(closed).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(design_butterworth_lowpass({0, 0.01}), SpecError);
  CHECK_THROWS_AS(design_butterworth_lowpass({4, 0.5}), SpecError);
}

TEST_CASE("circular zero-phase filtering scales each harmonic by the power gain") {
  const ButterworthParams p;
  const int n = static_cast<int>(kMinutesPerWeek);
  for (int k : {1, 7, 30, 84, 120}) {
    std::vector<double> x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = 3.0 + std::cos(2.0 * std::numbers::pi * k * i / n + 0.3);
    const auto y = filtfilt_circular(x, p);
    const double g = butterworth_power_gain(static_cast<double>(k) / n, p);
    double err = 0;
    for (int i = 0; i < n; ++i) {
      const double expect = 3.0 + g * std::cos(2.0 * std::numbers::pi * k * i / n + 0.3);
      err = std::max(err, std::abs(y[static_cast<std::size_t>(i)] - expect));
    }
    CHECK(err < 1e-9);
  }
}

TEST_CASE("constant training weeks give a constant signature") {
  std::vector<ActivityCube::Count> series(3 * kMinutesPerWeek, 17);
  const auto sig = compute_weekly_signature(series, {kMon, kMon + 3 * kMinutesPerWeek}, {});
  for (double v : sig.values) REQUIRE(v == doctest::Approx(17.0).epsilon(1e-12));
}

TEST_CASE("median is robust to one outlier week") {
  std::vector<ActivityCube::Count> series(3 * kMinutesPerWeek, 1);
  for (std::size_t i = 2 * kMinutesPerWeek; i < series.size(); ++i) series[i] = 100;
  int min_samples = 0;
  const auto med = minute_of_week_medians(series, {kMon, kMon + 3 * kMinutesPerWeek}, &min_samples);
  CHECK(min_samples == 3);
  for (double v : med) REQUIRE(v == 1.0);
}

TEST_CASE("median skips missing minutes and even counts average") {
  std::vector<ActivityCube::Count> series(4 * kMinutesPerWeek, 2);
  for (std::size_t w = 0; w < 4; ++w) series[w * kMinutesPerWeek + 5] = static_cast<int>(w) * 10;  // 0 10 20 30
  series[3 * kMinutesPerWeek + 6] = ActivityCube::kMissing;
  int min_samples = 0;
  const auto med = minute_of_week_medians(series, {kMon, kMon + 4 * kMinutesPerWeek}, &min_samples);
  CHECK(med[5] == 15.0);
  CHECK(med[6] == 2.0);
  CHECK(min_samples == 3);
}

TEST_CASE("too few weeks is insufficient data") {
  std::vector<ActivityCube::Count> series(2 * kMinutesPerWeek, 3);
  CHECK_THROWS_AS(compute_weekly_signature(series, {kMon, kMon + 2 * kMinutesPerWeek}, {}), InsufficientDataError);
}

TEST_CASE("daily sinusoid passes with under 1% attenuation") {
  const ButterworthParams p;
  const double expected_gain = butterworth_power_gain(1.0 / 1440.0, p);
  CHECK(1.0 - expected_gain < 0.01);
  std::vector<ActivityCube::Count> series(3 * kMinutesPerWeek);
  // amplitude 1000 so rounding to counts stays far below the tolerance
  for (std::size_t i = 0; i < series.size(); ++i) {
    series[i] = static_cast<int>(std::lround(2000.0 + 1000.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(i) / 1440.0)));
  }
  const auto sig = compute_weekly_signature(series, {kMon, kMon + 3 * kMinutesPerWeek}, {});
  double lo = 1e9, hi = -1e9;
  for (double v : sig.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double amplitude = (hi - lo) / 2.0;
  CHECK(amplitude > 990.0);
  CHECK(amplitude == doctest::Approx(1000.0 * expected_gain).epsilon(1e-3));
}

TEST_CASE("signature depends only on minute of week") {
  std::vector<ActivityCube::Count> series(4 * kMinutesPerWeek);
  std::mt19937_64 rng(3);
  std::poisson_distribution<int> d(20);
  for (auto& v : series) v = d(rng);
  const auto sig = compute_weekly_signature(series, {kMon, kMon + 4 * kMinutesPerWeek}, {});
  const auto dev = training_deviations(series, {kMon, kMon + 4 * kMinutesPerWeek}, sig);
  REQUIRE(dev.size() == series.size());
  for (std::size_t w = 0; w < 4; ++w) {
    for (std::size_t m : {0u, 777u, 10079u}) {
      REQUIRE(dev[w * kMinutesPerWeek + m] == series[w * kMinutesPerWeek + m] - sig.values[m]);
    }
  }
}

TEST_CASE("deviation arithmetic") {
  WeeklySignature sig{std::vector<double>(kMinutesPerWeek, 30.0)};
  sig.values[9] = 12.5;
  CHECK(compute_deviation(50, sig, 0) == 20.0);
  CHECK(compute_deviation(30, sig, 0) == 0.0);
  CHECK(compute_deviation(0, sig, 9) == -12.5);
}

TEST_CASE("tail cut from mean and standard deviation") {
  std::vector<double> sample(10080);
  for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = i % 2 ? 12.0 : 8.0;  // mean 10, sd 2
  const auto m = DeviationModel::fit(sample);
  CHECK(m.mean() == doctest::Approx(10.0));
  CHECK(m.stddev() == doctest::Approx(2.0));
  CHECK(m.threshold() == doctest::Approx(14.64));
}

TEST_CASE("fit rejects small and constant samples") {
  CHECK_THROWS_AS(DeviationModel::fit(std::vector<double>(100, 1.0)), InsufficientDataError);
  CHECK_THROWS_AS(DeviationModel::fit(std::vector<double>(20000, 1.0)), DegenerateModelError);
}

TEST_CASE("gamma fit recovers shape and scale") {
  std::mt19937_64 rng(2024);
  std::gamma_distribution<double> g(2.0, 5.0);
  std::vector<double> x(5000);
  for (auto& v : x) v = g(rng);
  const auto fit = fit_gamma(x);
  CHECK(fit.shape == doctest::Approx(2.0).epsilon(0.10));
  CHECK(fit.scale == doctest::Approx(5.0).epsilon(0.10));
  CHECK_FALSE(fit.exponential_fallback);
  CHECK(fit.mle_iterations <= 50);
  // the MLE satisfies log(a) - digamma(a) = log(mean) - mean(log)
  double mean = 0, mean_log = 0;
  for (double v : x) {
    mean += v;
    mean_log += std::log(v);
  }
  mean /= x.size();
  mean_log /= x.size();
  CHECK(fit.shape * fit.scale == doctest::Approx(mean).epsilon(1e-9));
  CHECK(std::log(fit.shape) - boost::math::digamma(fit.shape) ==
        doctest::Approx(std::log(mean) - mean_log).epsilon(1e-8));
}

TEST_CASE("gamma survival closed forms") {
  CHECK(gamma_survival(3.0, 1.0, 2.0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-14));
  // shape 2: (1 + x/b) exp(-x/b)
  CHECK(gamma_survival(7.0, 2.0, 5.0) == doctest::Approx((1 + 1.4) * std::exp(-1.4)).epsilon(1e-13));
  CHECK(gamma_log_survival(5000.0, 1.0, 1.0) == doctest::Approx(-5000.0).epsilon(1e-12));
  CHECK(std::isfinite(gamma_log_survival(1e7, 2.5, 3.0)));
}

TEST_CASE("compound survival at the sample minimum, the cut and above") {
  auto sample = normal_sample(20000, 0.0, 1.0, 7);
  const auto m = DeviationModel::fit(sample);
  const double lo = *std::min_element(sample.begin(), sample.end());
  CHECK(m.exceedance_likelihood(lo) == 1.0);
  CHECK(m.exceedance_likelihood(lo - 5.0) == 1.0);
  CHECK(m.exceedance_likelihood(m.threshold()) == doctest::Approx(m.p_tail()).epsilon(1e-15));
  CHECK(m.p_tail() == doctest::Approx(count_at_least(sample, m.threshold())));
  const double below = std::nextafter(m.threshold(), -1e300);
  CHECK(std::abs(m.exceedance_likelihood(below) - m.exceedance_likelihood(m.threshold())) < 1e-12);
  const auto& t = m.tail();
  CHECK(m.exceedance_likelihood(m.threshold() + 2 * t.scale) ==
        doctest::Approx(m.p_tail() * gamma_survival(2 * t.scale, t.shape, t.scale)).epsilon(1e-12));
}

TEST_CASE("exponential fallback one mean above the cut") {
  // a handful of exceedances far out in the tail
  std::vector<double> sample(10080, 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) sample[i] = static_cast<double>(i % 7);
  for (std::size_t i = 0; i < 12; ++i) sample[i] = 40.0 + static_cast<double>(i);
  const auto m = DeviationModel::fit(sample);
  REQUIRE(m.exceedance_count() == 12);
  REQUIRE(m.tail().exponential_fallback);
  CHECK(m.tail().shape == 1.0);
  double mean_excess = 0;
  for (std::size_t i = 0; i < 12; ++i) mean_excess += sample[i] - m.threshold();
  mean_excess /= 12;
  CHECK(m.tail().scale == doctest::Approx(mean_excess).epsilon(1e-12));
  const double eps = m.threshold() + m.tail().scale * m.tail().shape;
  CHECK(m.exceedance_likelihood(eps) == doctest::Approx(m.p_tail() * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("below the cut the likelihood is the exhaustive rank count") {
  auto sample = normal_sample(100, 5.0, 3.0, 99);
  DeviationModelParams params;
  params.min_samples = 100;
  params.min_gamma_exceedances = 1;
  const auto m = DeviationModel::fit(sample, params);
  for (double x : sample) {
    const double expect = x < m.threshold() ? std::max(count_at_least(sample, x), m.p_tail())
                                            : m.p_tail() * gamma_survival(x - m.threshold(), m.tail().shape, m.tail().scale);
    CHECK(m.exceedance_likelihood(x) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("survival is monotone and its log is consistent") {
  auto sample = normal_sample(30000, 0.0, 2.0, 5);
  // a skewed tail
  std::mt19937_64 rng(8);
  std::exponential_distribution<double> e(0.5);
  for (std::size_t i = 0; i < 3000; ++i) sample[i] = 4.0 + e(rng);
  const auto m = DeviationModel::fit(sample);
  double prev = 2.0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = -10.0 + 40.0 * i / 10000.0;
    const double s = m.exceedance_likelihood(x);
    REQUIRE(s <= prev);
    REQUIRE(s > 0.0);
    REQUIRE(std::log(s) == doctest::Approx(m.log_exceedance_likelihood(x)).epsilon(1e-12));
    prev = s;
  }
  CHECK(std::isfinite(m.log_exceedance_likelihood(1e6)));
}

TEST_CASE("held-out tail frequency matches p_tail") {
  const auto train = normal_sample(50000, 0.0, 1.0, 1);
  const auto test = normal_sample(50000, 0.0, 1.0, 2);
  const auto m = DeviationModel::fit(train);
  const double rate = count_at_least(test, m.threshold());
  CHECK(rate == doctest::Approx(m.p_tail()).epsilon(0.30));
}

TEST_CASE("rebuilt model scores identically") {
  const auto m = DeviationModel::fit(normal_sample(12000, 1.0, 2.0, 4));
  const auto r = DeviationModel::from_parts({m.sorted_sample().begin(), m.sorted_sample().end()}, m.h(),
                                            m.threshold(), m.p_tail(), m.tail());
  for (double x : {-3.0, 0.0, 1.0, 4.0, 6.0, 12.0}) CHECK(r.exceedance_likelihood(x) == m.exceedance_likelihood(x));
  CHECK(r.mean() == doctest::Approx(m.mean()));
}

TEST_CASE("fusion") {
  const std::vector<double> one{0.07};
  CHECK(fuse_likelihood_values(one)->value() == doctest::Approx(0.07).epsilon(1e-12));
  const std::vector<double> two{0.1, 0.2};
  CHECK(fuse_likelihood_values(two)->value() == doctest::Approx(0.02).epsilon(1e-12));
  const std::vector<double> four(4, 1e-3);
  const auto f = fuse_likelihood_values(four);
  CHECK(f->service_count() == 4);
  CHECK(f->value() == doctest::Approx(1e-12).epsilon(1e-12));
  CHECK(f->log_value == doctest::Approx(4 * std::log(1e-3)).epsilon(1e-14));
  // 40 factors of 1e-10 underflow a double product but not the log sum
  std::vector<ServiceLikelihood> many;
  for (std::size_t i = 0; i < 40; ++i) many.push_back({i, std::log(1e-10)});
  CHECK(fuse_likelihoods(many)->log_value == doctest::Approx(-400 * std::log(10.0)));
  CHECK_FALSE(fuse_likelihoods({}).has_value());
}

TEST_CASE("fused value never exceeds its smallest factor") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<ServiceLikelihood> factors;
    double smallest = 1.0;
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 5);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = u(rng);
      smallest = std::min(smallest, v);
      factors.push_back({i * 2, std::log(v)});
    }
    const auto f = fuse_likelihoods(factors);
    REQUIRE(f->value() <= smallest * (1 + 1e-12));
    REQUIRE(f->service_count() == static_cast<int>(n));
  }
}

TEST_CASE("service labels") {
  const std::vector<std::string> names{"call3g", "call4g", "sms3g", "sms4g"};
  CHECK(service_label(0b1010, names) == "call4g+sms4g");
  CHECK(service_label(0b0001, names) == "call3g");
}

}  // TEST_SUITE
