#include "urbanpulse/ground_truth.hpp"

#include <algorithm>

namespace urbanpulse {

std::uint64_t EvaluationGrid::minutes() const {
  std::uint64_t total = 0;
  for (const auto& r : ranges) total += static_cast<std::uint64_t>(std::max<std::int64_t>(r.length(), 0));
  return total;
}

bool EvaluationGrid::covers(Minute t) const {
  return std::any_of(ranges.begin(), ranges.end(), [t](const MinuteRange& r) { return r.contains(t); });
}

std::vector<MinuteRange> merge_ranges(std::vector<MinuteRange> ranges) {
  std::erase_if(ranges, [](const MinuteRange& r) { return r.empty(); });
  std::sort(ranges.begin(), ranges.end(),
            [](const MinuteRange& a, const MinuteRange& b) { return a.begin < b.begin; });
  std::vector<MinuteRange> out;
  for (const auto& r : ranges) {
    if (!out.empty() && r.begin <= out.back().end) {
      out.back().end = std::max(out.back().end, r.end);
    } else {
      out.push_back(r);
    }
  }
  return out;
}

GroundTruthMask::GroundTruthMask(std::size_t cell_count, std::vector<EventFootprint> events)
    : events_(std::move(events)), per_cell_(cell_count) {
  for (const auto& ev : events_) {
    for (const auto c : ev.cells) {
      per_cell_[c].insert(per_cell_[c].end(), ev.windows.begin(), ev.windows.end());
    }
  }
  for (auto& ranges : per_cell_) ranges = merge_ranges(std::move(ranges));
}

bool GroundTruthMask::contains(std::size_t cell, Minute t) const {
  if (cell >= per_cell_.size()) return false;
  const auto& ranges = per_cell_[cell];
  auto it = std::upper_bound(ranges.begin(), ranges.end(), t,
                             [](Minute v, const MinuteRange& r) { return v < r.begin; });
  if (it == ranges.begin()) return false;
  return std::prev(it)->contains(t);
}

std::uint64_t GroundTruthMask::size_within(const EvaluationGrid& grid) const {
  const auto grid_ranges = merge_ranges(grid.ranges);
  std::uint64_t total = 0;
  for (std::size_t c = 0; c < per_cell_.size() && c < grid.cells.size(); ++c) {
    for (const auto& r : per_cell_[c]) {
      for (const auto& g : grid_ranges) {
        const Minute lo = std::max(r.begin, g.begin);
        const Minute hi = std::min(r.end, g.end);
        if (hi > lo) total += static_cast<std::uint64_t>(hi - lo);
      }
    }
  }
  return total;
}

GroundTruthMask expand_ground_truth(const std::vector<UncommonEvent>& events,
                                    const CellRegistry& registry,
                                    const std::vector<std::string>& grid_cells,
                                    const ExpansionOptions& options,
                                    std::vector<std::string>* warnings) {
  std::vector<const CellSite*> sites(grid_cells.size(), nullptr);
  for (std::size_t c = 0; c < grid_cells.size(); ++c) {
    sites[c] = registry.find(grid_cells[c]);
    if (!sites[c] && warnings) warnings->push_back("cell '" + grid_cells[c] + "' has no registry location");
  }
  std::vector<EventFootprint> footprints;
  for (const auto& ev : events) {
    EventFootprint fp;
    fp.event_id = ev.id;
    fp.start = ev.start;
    fp.windows = merge_ranges(ev.windows());
    const double radius = ev.radius_m.value_or(options.default_radius_m);
    for (std::size_t c = 0; c < sites.size(); ++c) {
      if (!sites[c]) continue;
      const bool in_range = std::any_of(ev.epicenters.begin(), ev.epicenters.end(), [&](const GeoPoint& p) {
        return haversine_m(p, sites[c]->location) <= radius;
      });
      if (in_range) fp.cells.push_back(c);
    }
    fp.detectable = !fp.cells.empty();
    if (!fp.detectable && warnings) {
      warnings->push_back("event '" + ev.id + "' has no antenna within " + std::to_string(radius) + " m");
    }
    footprints.push_back(std::move(fp));
  }
  return GroundTruthMask(grid_cells.size(), std::move(footprints));
}

}  // namespace urbanpulse
