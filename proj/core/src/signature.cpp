#include "urbanpulse/signature.hpp"

#include <algorithm>
#include <limits>

#include "urbanpulse/error.hpp"

namespace urbanpulse {

std::vector<double> minute_of_week_medians(std::span<const ActivityCube::Count> series,
                                           MinuteRange span, int* min_samples) {
  std::vector<std::vector<ActivityCube::Count>> buckets(kMinutesPerWeek);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto v = series[i];
    if (v == ActivityCube::kMissing) continue;
    buckets[static_cast<std::size_t>(minute_of_week(span.begin + static_cast<Minute>(i)))]
        .push_back(v);
  }
  std::vector<double> medians(kMinutesPerWeek, 0.0);
  int fewest = std::numeric_limits<int>::max();
  for (std::size_t m = 0; m < buckets.size(); ++m) {
    auto& b = buckets[m];
    fewest = std::min(fewest, static_cast<int>(b.size()));
    if (b.empty()) continue;
    const std::size_t mid = b.size() / 2;
    std::nth_element(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(mid), b.end());
    const double upper = b[mid];
    if (b.size() % 2 == 1) {
      medians[m] = upper;
    } else {
      const double lower = *std::max_element(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(mid));
      medians[m] = 0.5 * (lower + upper);
    }
  }
  if (min_samples) *min_samples = fewest;
  return medians;
}

WeeklySignature compute_weekly_signature(std::span<const ActivityCube::Count> series,
                                         MinuteRange span, const SignatureParams& params) {
  int fewest = 0;
  const auto medians = minute_of_week_medians(series, span, &fewest);
  if (fewest < params.min_weeks) {
    throw InsufficientDataError("signature needs " + std::to_string(params.min_weeks) +
                                " training weeks per minute-of-week, found " +
                                std::to_string(fewest));
  }
  return WeeklySignature{filtfilt_circular(medians, params.filter)};
}

std::vector<double> training_deviations(std::span<const ActivityCube::Count> series,
                                        MinuteRange span, const WeeklySignature& signature) {
  std::vector<double> out;
  out.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto v = series[i];
    if (v == ActivityCube::kMissing) continue;
    out.push_back(compute_deviation(v, signature, minute_of_week(span.begin + static_cast<Minute>(i))));
  }
  return out;
}

}  // namespace urbanpulse
