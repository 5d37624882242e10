#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanpulse/activity.hpp"

namespace urbanpulse {

// A recurring daily slot of a multi-day event.
struct DayWindow {
  std::int64_t day = 0;  // days since epoch
  int start_minute = 0;  // minutes after midnight
  int end_minute = 0;
};

inline constexpr int kDefaultDetectionWindowMin = 15;

// One ground-truth uncommon event.
struct UncommonEvent {
  std::string id;
  std::string label;
  std::vector<GeoPoint> epicenters;
  Minute start = 0;
  std::optional<Minute> end;
  std::vector<DayWindow> days;
  std::optional<double> radius_m;
  int pre_buffer_min = 0;
  int post_buffer_min = 0;
  int detection_window_min = kDefaultDetectionWindowMin;
  std::string description;
  std::vector<std::string> sources;

  // Tolerance windows, each inclusive of both end minutes and expressed as
  // half-open ranges: per day slot when `days` is set, else
  // [start - pre, end + post], else [start - pre, start + detection window + post].
  std::vector<MinuteRange> windows() const;
};

struct RejectedRecord {
  std::size_t index = 0;
  std::string id;
  std::string reason;
};

struct DbueLoadResult {
  std::vector<UncommonEvent> events;
  std::vector<RejectedRecord> rejected;
};

// Accepts a top-level array of records or {"events": [...]}. Invalid records
// are reported in `rejected` and skipped.
DbueLoadResult parse_dbue(const nlohmann::json& doc);
DbueLoadResult load_dbue(const std::filesystem::path& path);

nlohmann::json dbue_to_json(const std::vector<UncommonEvent>& events);
void save_dbue(const std::filesystem::path& path, const std::vector<UncommonEvent>& events);

}  // namespace urbanpulse
