#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "urbanpulse/activity.hpp"

namespace urbanpulse {

// Column names of the activity file. The canonical header is
// `minute,cell_id,service,count`; a different mapping lets foreign exports be
// read without rewriting them.
struct ActivityCsvSchema {
  std::string minute = "minute";
  std::string cell = "cell_id";
  std::string service = "service";
  std::string count = "count";
};

struct ActivityLoadStats {
  std::size_t rows = 0;
  std::size_t duplicate_rows = 0;
  MinuteRange span;
};

// Duplicate (cell, service, minute) rows are summed. Cells and services are
// sorted by name. The cube span runs from the first to the last minute seen.
ActivityCube read_activity_csv(std::istream& in, const ActivityCsvSchema& schema = {},
                               ActivityLoadStats* stats = nullptr);
ActivityCube load_activity_csv(const std::filesystem::path& path,
                               const ActivityCsvSchema& schema = {},
                               ActivityLoadStats* stats = nullptr);

// Canonical form: header, then present slots sorted by (minute, cell, service).
void write_activity_csv(std::ostream& out, const ActivityCube& cube);
void save_activity_csv(const std::filesystem::path& path, const ActivityCube& cube);

// `cell_id,lat,lon`.
CellRegistry read_cell_registry(std::istream& in);
CellRegistry load_cell_registry(const std::filesystem::path& path);
void write_cell_registry(std::ostream& out, const CellRegistry& registry);
void save_cell_registry(const std::filesystem::path& path, const CellRegistry& registry);

}  // namespace urbanpulse
