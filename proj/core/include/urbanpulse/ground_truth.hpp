#pragma once

#include <string>
#include <vector>

#include "urbanpulse/activity.hpp"
#include "urbanpulse/dbue.hpp"

namespace urbanpulse {

inline constexpr double kDefaultRadiusM = 300.0;

// Antenna-minute grid over which detections are judged.
struct EvaluationGrid {
  std::vector<std::string> cells;
  std::vector<MinuteRange> ranges;  // disjoint

  std::uint64_t minutes() const;
  std::uint64_t antenna_minutes() const { return minutes() * cells.size(); }
  bool covers(Minute t) const;
};

// Cells within the radius of an event, and the tolerance windows.
struct EventFootprint {
  std::string event_id;
  Minute start = 0;
  std::vector<std::size_t> cells;  // indices into the grid's cell list
  std::vector<MinuteRange> windows;
  bool detectable = true;          // at least one cell in range
};

// Union of all footprints, per cell as merged sorted minute ranges.
class GroundTruthMask {
 public:
  GroundTruthMask() = default;
  GroundTruthMask(std::size_t cell_count, std::vector<EventFootprint> events);

  const std::vector<EventFootprint>& events() const { return events_; }
  bool contains(std::size_t cell, Minute t) const;
  // |GT+| restricted to the grid.
  std::uint64_t size_within(const EvaluationGrid& grid) const;
  const std::vector<MinuteRange>& cell_ranges(std::size_t cell) const { return per_cell_[cell]; }

 private:
  std::vector<EventFootprint> events_;
  std::vector<std::vector<MinuteRange>> per_cell_;
};

struct ExpansionOptions {
  double default_radius_m = kDefaultRadiusM;
};

// Antennas within the event radius (haversine, inclusive) of any epicenter.
// Grid cells missing from the registry never match. Events without any
// antenna in range are kept, flagged undetectable, and listed in `warnings`.
GroundTruthMask expand_ground_truth(const std::vector<UncommonEvent>& events,
                                    const CellRegistry& registry,
                                    const std::vector<std::string>& grid_cells,
                                    const ExpansionOptions& options = {},
                                    std::vector<std::string>* warnings = nullptr);

// Merges overlapping or adjacent ranges.
std::vector<MinuteRange> merge_ranges(std::vector<MinuteRange> ranges);

}  // namespace urbanpulse
