#include "urbanpulse/butterworth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

void validate(const ButterworthParams& p) {
  if (p.order < 1) throw SpecError("Butterworth order must be >= 1");
  if (!(p.cutoff > 0.0 && p.cutoff < 0.5)) {
    throw SpecError("Butterworth cutoff must lie in (0, 0.5) cycles/sample");
  }
}

// Runs the cascade over `x` in place, starting from zero state.
void run_cascade(const std::vector<Biquad>& sections, std::vector<double>& x) {
  for (const auto& s : sections) {
    double z1 = 0.0, z2 = 0.0;
    for (double& v : x) {
      const double in = v;
      const double out = s.b0 * in + z1;
      z1 = s.b1 * in - s.a1 * out + z2;
      z2 = s.b2 * in - s.a2 * out;
      v = out;
    }
  }
}

// Filters the periodic extension of `period` and returns the final period,
// after enough leading periods for the transient to die out.
std::vector<double> steady_state(const std::vector<Biquad>& sections,
                                 std::span<const double> period, std::size_t warmup_periods) {
  const std::size_t n = period.size();
  std::vector<double> ext;
  ext.reserve(n * (warmup_periods + 1));
  for (std::size_t k = 0; k <= warmup_periods; ++k) ext.insert(ext.end(), period.begin(), period.end());
  run_cascade(sections, ext);
  return {ext.end() - static_cast<std::ptrdiff_t>(n), ext.end()};
}

}  // namespace

std::vector<Biquad> design_butterworth_lowpass(const ButterworthParams& params) {
  validate(params);
  const int n = params.order;
  const double w0 = 2.0 * std::numbers::pi * params.cutoff;
  const double cw = std::cos(w0);
  const double sw = std::sin(w0);
  std::vector<Biquad> sections;
  for (int k = 0; k < n / 2; ++k) {
    // Pole pair k of the analog prototype has Q = 1 / (2 sin((2k+1) pi / 2n)).
    const double q = 1.0 / (2.0 * std::sin((2.0 * k + 1.0) * std::numbers::pi / (2.0 * n)));
    const double alpha = sw / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad s;
    s.b0 = (1.0 - cw) / 2.0 / a0;
    s.b1 = (1.0 - cw) / a0;
    s.b2 = s.b0;
    s.a1 = -2.0 * cw / a0;
    s.a2 = (1.0 - alpha) / a0;
    sections.push_back(s);
  }
  if (n % 2 == 1) {
    const double k = std::tan(std::numbers::pi * params.cutoff);
    Biquad s;
    s.b0 = k / (1.0 + k);
    s.b1 = s.b0;
    s.a1 = (k - 1.0) / (k + 1.0);
    sections.push_back(s);
  }
  return sections;
}

double butterworth_power_gain(double frequency, const ButterworthParams& params) {
  validate(params);
  const double ratio = std::tan(std::numbers::pi * std::abs(frequency)) /
                       std::tan(std::numbers::pi * params.cutoff);
  return 1.0 / (1.0 + std::pow(ratio, 2.0 * params.order));
}

std::vector<double> filtfilt_circular(std::span<const double> period,
                                      const ButterworthParams& params) {
  const auto sections = design_butterworth_lowpass(params);
  if (period.empty()) return {};
  // The slowest pole decays by ~1e-16 within ~30 / cutoff samples.
  const double settle = 30.0 / params.cutoff * params.order;
  const auto warmup = static_cast<std::size_t>(
      std::max(1.0, std::ceil(settle / static_cast<double>(period.size()))));
  std::vector<double> forward = steady_state(sections, period, warmup);
  std::reverse(forward.begin(), forward.end());
  std::vector<double> backward = steady_state(sections, forward, warmup);
  std::reverse(backward.begin(), backward.end());
  return backward;
}

}  // namespace urbanpulse
