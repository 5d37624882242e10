#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "urbanpulse/time.hpp"

namespace urbanpulse {

// Half-open minute interval [begin, end).
struct MinuteRange {
  Minute begin = 0;
  Minute end = 0;

  std::int64_t length() const { return end - begin; }
  bool contains(Minute t) const { return t >= begin && t < end; }
  bool empty() const { return end <= begin; }
  friend bool operator==(const MinuteRange&, const MinuteRange&) = default;
};

// Dense minute-by-minute counts for every (cell, service) pair over one
// contiguous span. Absent observations are stored as kMissing and are never
// conflated with a zero count.
class ActivityCube {
 public:
  using Count = std::int32_t;
  static constexpr Count kMissing = -1;

  ActivityCube() = default;
  // Cell and service names must be unique; every slot starts missing.
  ActivityCube(std::vector<std::string> cells, std::vector<std::string> services, MinuteRange span);

  const std::vector<std::string>& cells() const { return cells_; }
  const std::vector<std::string>& services() const { return services_; }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t service_count() const { return services_.size(); }
  MinuteRange span() const { return span_; }
  std::int64_t length() const { return span_.length(); }

  std::optional<std::size_t> find_cell(std::string_view id) const;
  std::optional<std::size_t> find_service(std::string_view name) const;

  std::span<const Count> series(std::size_t cell, std::size_t service) const;
  std::span<Count> series(std::size_t cell, std::size_t service);

  std::optional<Count> at(std::size_t cell, std::size_t service, Minute t) const;
  void set(std::size_t cell, std::size_t service, Minute t, Count value);
  // Adds to the slot, treating a missing slot as 0.
  void add(std::size_t cell, std::size_t service, Minute t, Count value);

  // Number of present (non-missing) slots.
  std::size_t present_count() const;

  // Copy restricted to `range` (must lie inside the span).
  ActivityCube restricted(MinuteRange range) const;
  // Copy over the same span where every minute in `range` is marked missing.
  ActivityCube without(MinuteRange range) const;
  // Copy keeping only the named services (in the given order).
  ActivityCube with_services(const std::vector<std::string>& services) const;

  friend bool operator==(const ActivityCube&, const ActivityCube&) = default;

 private:
  std::size_t offset(std::size_t cell, std::size_t service) const {
    return (cell * services_.size() + service) * static_cast<std::size_t>(span_.length());
  }

  std::vector<std::string> cells_;
  std::vector<std::string> services_;
  MinuteRange span_;
  std::vector<Count> counts_;
};

struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;
};

// Great-circle distance in meters (mean Earth radius 6371008.8 m).
double haversine_m(GeoPoint a, GeoPoint b);

struct CellSite {
  std::string id;
  GeoPoint location;
};

// Antenna locations keyed by cell id.
class CellRegistry {
 public:
  CellRegistry() = default;
  // Throws ValidationError on duplicate ids or out-of-range coordinates.
  explicit CellRegistry(std::vector<CellSite> sites);

  const std::vector<CellSite>& sites() const { return sites_; }
  std::size_t size() const { return sites_.size(); }
  const CellSite* find(std::string_view id) const;

 private:
  std::vector<CellSite> sites_;
};

}  // namespace urbanpulse
