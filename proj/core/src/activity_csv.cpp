#include "urbanpulse/activity_csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool next_line(std::istream& in, std::string& line, long& line_no) {
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!trim(line).empty()) return true;
  }
  return false;
}

std::size_t column_of(const std::vector<std::string_view>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return i;
  }
  throw ParseError("missing column '" + name + "' in header", 1);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open " + path.string());
  return in;
}

double parse_double(std::string_view s, long line, const char* what) {
  s = trim(s);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(s) + "'", line);
  }
  return v;
}

}  // namespace

ActivityCube read_activity_csv(std::istream& in, const ActivityCsvSchema& schema,
                               ActivityLoadStats* stats) {
  std::string line;
  long line_no = 0;
  if (!next_line(in, line, line_no)) throw EmptyInputError("activity file is empty");
  const auto header = split_fields(line);
  const std::size_t c_minute = column_of(header, schema.minute);
  const std::size_t c_cell = column_of(header, schema.cell);
  const std::size_t c_service = column_of(header, schema.service);
  const std::size_t c_count = column_of(header, schema.count);
  const std::size_t width = header.size();

  using Key = std::tuple<std::string, std::string, Minute>;
  std::map<Key, std::int64_t> sums;
  std::size_t rows = 0;
  while (next_line(in, line, line_no)) {
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    Minute t = 0;
    try {
      t = parse_minute(trim(fields[c_minute]));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    const auto cell = trim(fields[c_cell]);
    const auto service = trim(fields[c_service]);
    if (cell.empty()) throw ParseError("empty cell id", line_no);
    if (service.empty()) throw ParseError("empty service", line_no);
    const auto count_text = trim(fields[c_count]);
    std::int64_t count = 0;
    const auto [ptr, ec] =
        std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
    if (ec != std::errc() || ptr != count_text.data() + count_text.size()) {
      throw ParseError("invalid count '" + std::string(count_text) + "'", line_no);
    }
    if (count < 0) {
      throw ValidationError("negative count " + std::to_string(count), line_no);
    }
    auto [it, inserted] = sums.try_emplace(Key{std::string(cell), std::string(service), t}, 0);
    if (!inserted && stats) ++stats->duplicate_rows;
    it->second += count;
    if (it->second > INT32_MAX) throw ValidationError("count overflow", line_no);
    ++rows;
  }
  if (sums.empty()) throw EmptyInputError("activity file has no data rows");

  std::vector<std::string> cells, services;
  Minute lo = INT64_MAX, hi = INT64_MIN;
  for (const auto& [key, v] : sums) {
    cells.push_back(std::get<0>(key));
    services.push_back(std::get<1>(key));
    lo = std::min(lo, std::get<2>(key));
    hi = std::max(hi, std::get<2>(key));
  }
  std::sort(cells.begin(), cells.end());
  cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
  std::sort(services.begin(), services.end());
  services.erase(std::unique(services.begin(), services.end()), services.end());

  ActivityCube cube(cells, services, MinuteRange{lo, hi + 1});
  std::size_t c = 0;
  for (const auto& [key, v] : sums) {
    // Keys are sorted by cell first, so the cell cursor only moves forward.
    while (cells[c] != std::get<0>(key)) ++c;
    const auto s = static_cast<std::size_t>(
        std::lower_bound(services.begin(), services.end(), std::get<1>(key)) - services.begin());
    cube.set(c, s, std::get<2>(key), static_cast<ActivityCube::Count>(v));
  }
  if (stats) {
    stats->rows = rows;
    stats->span = cube.span();
  }
  return cube;
}

ActivityCube load_activity_csv(const std::filesystem::path& path, const ActivityCsvSchema& schema,
                               ActivityLoadStats* stats) {
  auto in = open_in(path);
  return read_activity_csv(in, schema, stats);
}

void write_activity_csv(std::ostream& out, const ActivityCube& cube) {
  out << "minute,cell_id,service,count\n";
  // Cells and services are already name-sorted when loaded from CSV, but
  // cubes built in memory may not be.
  std::vector<std::size_t> cell_order(cube.cell_count()), service_order(cube.service_count());
  for (std::size_t i = 0; i < cell_order.size(); ++i) cell_order[i] = i;
  for (std::size_t i = 0; i < service_order.size(); ++i) service_order[i] = i;
  std::sort(cell_order.begin(), cell_order.end(),
            [&](std::size_t a, std::size_t b) { return cube.cells()[a] < cube.cells()[b]; });
  std::sort(service_order.begin(), service_order.end(), [&](std::size_t a, std::size_t b) {
    return cube.services()[a] < cube.services()[b];
  });
  std::string buf;
  for (Minute t = cube.span().begin; t < cube.span().end; ++t) {
    const auto i = static_cast<std::size_t>(t - cube.span().begin);
    std::string stamp;
    for (const std::size_t c : cell_order) {
      for (const std::size_t s : service_order) {
        const auto v = cube.series(c, s)[i];
        if (v == ActivityCube::kMissing) continue;
        if (stamp.empty()) stamp = format_minute(t);
        buf.append(stamp).append(",").append(cube.cells()[c]).append(",");
        buf.append(cube.services()[s]).append(",").append(std::to_string(v)).append("\n");
      }
    }
    if (buf.size() > (1u << 20)) {
      out << buf;
      buf.clear();
    }
  }
  out << buf;
}

void save_activity_csv(const std::filesystem::path& path, const ActivityCube& cube) {
  auto out = open_out(path);
  write_activity_csv(out, cube);
}

CellRegistry read_cell_registry(std::istream& in) {
  std::string line;
  long line_no = 0;
  if (!next_line(in, line, line_no)) throw EmptyInputError("cell registry is empty");
  const auto header = split_fields(line);
  const std::size_t c_id = column_of(header, "cell_id");
  const std::size_t c_lat = column_of(header, "lat");
  const std::size_t c_lon = column_of(header, "lon");
  std::vector<CellSite> sites;
  while (next_line(in, line, line_no)) {
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) throw ParseError("wrong field count", line_no);
    CellSite site{std::string(trim(fields[c_id])),
                  {parse_double(fields[c_lat], line_no, "latitude"),
                   parse_double(fields[c_lon], line_no, "longitude")}};
    if (site.location.lat < -90 || site.location.lat > 90 || site.location.lon < -180 ||
        site.location.lon > 180) {
      throw ValidationError("coordinates out of range", line_no);
    }
    sites.push_back(std::move(site));
  }
  return CellRegistry(std::move(sites));
}

CellRegistry load_cell_registry(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_cell_registry(in);
}

void write_cell_registry(std::ostream& out, const CellRegistry& registry) {
  out << "cell_id,lat,lon\n";
  char buf[64];
  for (const auto& site : registry.sites()) {
    std::snprintf(buf, sizeof buf, "%.7f,%.7f", site.location.lat, site.location.lon);
    out << site.id << ',' << buf << '\n';
  }
}

void save_cell_registry(const std::filesystem::path& path, const CellRegistry& registry) {
  auto out = open_out(path);
  write_cell_registry(out, registry);
}

}  // namespace urbanpulse
