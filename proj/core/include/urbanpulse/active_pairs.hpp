#pragma once

#include <cstddef>
#include <vector>

#include "urbanpulse/activity.hpp"

namespace urbanpulse {

struct PairIndex {
  std::size_t cell = 0;
  std::size_t service = 0;
  friend auto operator<=>(const PairIndex&, const PairIndex&) = default;
};

inline constexpr double kDefaultMinMeanRate = 0.1;

// Mean count over the present minutes of one series; 0 when nothing is present.
double mean_rate(std::span<const ActivityCube::Count> series);

// Pairs whose training mean count reaches `min_mean_rate` events/minute,
// ordered by (cell, service). With min_mean_rate == 0 every pair is kept.
std::vector<PairIndex> filter_active_pairs(const ActivityCube& train, double min_mean_rate);

}  // namespace urbanpulse
