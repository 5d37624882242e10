#include "urbanpulse/active_pairs.hpp"

namespace urbanpulse {

double mean_rate(std::span<const ActivityCube::Count> series) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto v : series) {
    if (v == ActivityCube::kMissing) continue;
    sum += v;
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::vector<PairIndex> filter_active_pairs(const ActivityCube& train, double min_mean_rate) {
  std::vector<PairIndex> out;
  for (std::size_t c = 0; c < train.cell_count(); ++c) {
    for (std::size_t s = 0; s < train.service_count(); ++s) {
      if (min_mean_rate <= 0.0 || mean_rate(train.series(c, s)) >= min_mean_rate) {
        out.push_back({c, s});
      }
    }
  }
  return out;
}

}  // namespace urbanpulse
