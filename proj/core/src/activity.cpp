#include "urbanpulse/activity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

void require_unique(const std::vector<std::string>& names, const char* what) {
  std::set<std::string_view> seen;
  for (const auto& n : names) {
    if (n.empty()) throw ValidationError(std::string("empty ") + what + " name");
    if (!seen.insert(n).second) throw ValidationError(std::string("duplicate ") + what + " '" + n + "'");
  }
}

}  // namespace

ActivityCube::ActivityCube(std::vector<std::string> cells, std::vector<std::string> services,
                           MinuteRange span)
    : cells_(std::move(cells)), services_(std::move(services)), span_(span) {
  require_unique(cells_, "cell");
  require_unique(services_, "service");
  if (span_.length() < 0) throw ValidationError("negative cube span");
  counts_.assign(cells_.size() * services_.size() * static_cast<std::size_t>(span_.length()),
                 kMissing);
}

std::optional<std::size_t> ActivityCube::find_cell(std::string_view id) const {
  const auto it = std::find(cells_.begin(), cells_.end(), id);
  if (it == cells_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - cells_.begin());
}

std::optional<std::size_t> ActivityCube::find_service(std::string_view name) const {
  const auto it = std::find(services_.begin(), services_.end(), name);
  if (it == services_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - services_.begin());
}

std::span<const ActivityCube::Count> ActivityCube::series(std::size_t cell,
                                                          std::size_t service) const {
  return {counts_.data() + offset(cell, service), static_cast<std::size_t>(span_.length())};
}

std::span<ActivityCube::Count> ActivityCube::series(std::size_t cell, std::size_t service) {
  return {counts_.data() + offset(cell, service), static_cast<std::size_t>(span_.length())};
}

std::optional<ActivityCube::Count> ActivityCube::at(std::size_t cell, std::size_t service,
                                                    Minute t) const {
  if (!span_.contains(t)) return std::nullopt;
  const Count v = counts_[offset(cell, service) + static_cast<std::size_t>(t - span_.begin)];
  if (v == kMissing) return std::nullopt;
  return v;
}

void ActivityCube::set(std::size_t cell, std::size_t service, Minute t, Count value) {
  if (!span_.contains(t)) throw ValidationError("minute outside cube span");
  if (value < 0 && value != kMissing) throw ValidationError("negative count");
  counts_[offset(cell, service) + static_cast<std::size_t>(t - span_.begin)] = value;
}

void ActivityCube::add(std::size_t cell, std::size_t service, Minute t, Count value) {
  if (!span_.contains(t)) throw ValidationError("minute outside cube span");
  if (value < 0) throw ValidationError("negative count");
  Count& slot = counts_[offset(cell, service) + static_cast<std::size_t>(t - span_.begin)];
  slot = (slot == kMissing ? 0 : slot) + value;
}

std::size_t ActivityCube::present_count() const {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(), [](Count c) { return c != kMissing; }));
}

ActivityCube ActivityCube::restricted(MinuteRange range) const {
  if (range.begin < span_.begin || range.end > span_.end || range.length() < 0) {
    throw SpecError("restriction range outside cube span");
  }
  ActivityCube out(cells_, services_, range);
  const auto from = static_cast<std::size_t>(range.begin - span_.begin);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (std::size_t s = 0; s < services_.size(); ++s) {
      const auto src = series(c, s).subspan(from, static_cast<std::size_t>(range.length()));
      std::copy(src.begin(), src.end(), out.series(c, s).begin());
    }
  }
  return out;
}

ActivityCube ActivityCube::without(MinuteRange range) const {
  ActivityCube out = *this;
  const Minute lo = std::max(range.begin, span_.begin);
  const Minute hi = std::min(range.end, span_.end);
  if (hi <= lo) return out;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (std::size_t s = 0; s < services_.size(); ++s) {
      auto dst = out.series(c, s).subspan(static_cast<std::size_t>(lo - span_.begin),
                                          static_cast<std::size_t>(hi - lo));
      std::fill(dst.begin(), dst.end(), kMissing);
    }
  }
  return out;
}

ActivityCube ActivityCube::with_services(const std::vector<std::string>& services) const {
  std::vector<std::size_t> idx;
  for (const auto& name : services) {
    const auto s = find_service(name);
    if (!s) throw NotFoundError("service '" + name + "' not present in activity data");
    idx.push_back(*s);
  }
  ActivityCube out(cells_, services, span_);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const auto src = series(c, idx[k]);
      std::copy(src.begin(), src.end(), out.series(c, k).begin());
    }
  }
  return out;
}

double haversine_m(GeoPoint a, GeoPoint b) {
  constexpr double kEarthRadius = 6371008.8;
  constexpr double kRad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * kRad;
  const double dlon = (b.lon - a.lon) * kRad;
  const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kRad) * std::cos(b.lat * kRad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(s)));
}

CellRegistry::CellRegistry(std::vector<CellSite> sites) : sites_(std::move(sites)) {
  std::set<std::string_view> seen;
  for (const auto& site : sites_) {
    if (site.id.empty()) throw ValidationError("empty cell id in registry");
    if (!seen.insert(site.id).second) throw ValidationError("duplicate cell id '" + site.id + "'");
    if (!(site.location.lat >= -90.0 && site.location.lat <= 90.0) ||
        !(site.location.lon >= -180.0 && site.location.lon <= 180.0)) {
      throw ValidationError("cell '" + site.id + "' has out-of-range coordinates");
    }
  }
}

const CellSite* CellRegistry::find(std::string_view id) const {
  for (const auto& site : sites_) {
    if (site.id == id) return &site;
  }
  return nullptr;
}

}  // namespace urbanpulse
