#include "urbanpulse/dbue.hpp"

#include <cstdio>
#include <fstream>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

using nlohmann::json;

UncommonEvent parse_event(const json& rec) {
  if (!rec.is_object()) throw ValidationError("record is not an object");
  UncommonEvent ev;
  if (!rec.contains("id")) throw ValidationError("missing id");
  ev.id = rec.at("id").is_string() ? rec.at("id").get<std::string>() : rec.at("id").dump();
  ev.label = rec.value("label", std::string());

  if (!rec.contains("epicenters") || !rec.at("epicenters").is_array() ||
      rec.at("epicenters").empty()) {
    throw ValidationError("missing epicenter");
  }
  for (const auto& p : rec.at("epicenters")) {
    GeoPoint g{p.at("lat").get<double>(), p.at("lon").get<double>()};
    if (g.lat < -90 || g.lat > 90 || g.lon < -180 || g.lon > 180) {
      throw ValidationError("epicenter coordinates out of range");
    }
    ev.epicenters.push_back(g);
  }

  if (!rec.contains("start") || !rec.at("start").is_string()) throw ValidationError("missing start");
  ev.start = parse_minute(rec.at("start").get<std::string>());
  if (rec.contains("end") && !rec.at("end").is_null()) {
    ev.end = parse_minute(rec.at("end").get<std::string>());
    if (*ev.end <= ev.start) throw ValidationError("end is not after start");
  }
  if (rec.contains("days")) {
    for (const auto& d : rec.at("days")) {
      DayWindow w{parse_date(d.at("date").get<std::string>()),
                  parse_time_of_day(d.at("start_time").get<std::string>()),
                  parse_time_of_day(d.at("end_time").get<std::string>())};
      if (w.end_minute <= w.start_minute) throw ValidationError("day window end is not after start");
      ev.days.push_back(w);
    }
  }
  if (rec.contains("radius_m") && !rec.at("radius_m").is_null()) {
    ev.radius_m = rec.at("radius_m").get<double>();
    if (!(*ev.radius_m > 0.0)) throw ValidationError("radius_m must be positive");
  }
  ev.pre_buffer_min = rec.value("pre_buffer_min", 0);
  ev.post_buffer_min = rec.value("post_buffer_min", 0);
  ev.detection_window_min = rec.value("detection_window_min", kDefaultDetectionWindowMin);
  if (ev.pre_buffer_min < 0 || ev.post_buffer_min < 0 || ev.detection_window_min < 0) {
    throw ValidationError("buffers and detection window must be non-negative");
  }
  ev.description = rec.value("description", std::string());
  if (rec.contains("sources")) ev.sources = rec.at("sources").get<std::vector<std::string>>();
  return ev;
}

}  // namespace

std::vector<MinuteRange> UncommonEvent::windows() const {
  std::vector<MinuteRange> out;
  if (!days.empty()) {
    for (const auto& d : days) {
      const Minute base = d.day * kMinutesPerDay;
      out.push_back({base + d.start_minute - pre_buffer_min, base + d.end_minute + post_buffer_min + 1});
    }
  } else if (end) {
    out.push_back({start - pre_buffer_min, *end + post_buffer_min + 1});
  } else {
    out.push_back({start - pre_buffer_min, start + detection_window_min + post_buffer_min + 1});
  }
  return out;
}

DbueLoadResult parse_dbue(const json& doc) {
  const json* records = &doc;
  if (doc.is_object() && doc.contains("events")) records = &doc.at("events");
  if (!records->is_array()) throw ParseError("DBUE document must be an array of events");
  DbueLoadResult result;
  for (std::size_t i = 0; i < records->size(); ++i) {
    const auto& rec = (*records)[i];
    try {
      result.events.push_back(parse_event(rec));
    } catch (const std::exception& e) {
      std::string id;
      if (rec.is_object() && rec.contains("id")) {
        id = rec.at("id").is_string() ? rec.at("id").get<std::string>() : rec.at("id").dump();
      }
      result.rejected.push_back({i, id, e.what()});
    }
  }
  return result;
}

DbueLoadResult load_dbue(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_dbue(doc);
}

json dbue_to_json(const std::vector<UncommonEvent>& events) {
  json arr = json::array();
  for (const auto& ev : events) {
    json rec;
    rec["id"] = ev.id;
    rec["label"] = ev.label;
    json pts = json::array();
    for (const auto& p : ev.epicenters) pts.push_back({{"lat", p.lat}, {"lon", p.lon}});
    rec["epicenters"] = pts;
    rec["start"] = format_minute(ev.start);
    if (ev.end) rec["end"] = format_minute(*ev.end);
    if (!ev.days.empty()) {
      json days = json::array();
      for (const auto& d : ev.days) {
        char a[32], b[32];
        std::snprintf(a, sizeof a, "%02d:%02d", d.start_minute / 60, d.start_minute % 60);
        std::snprintf(b, sizeof b, "%02d:%02d", d.end_minute / 60, d.end_minute % 60);
        days.push_back({{"date", format_date(d.day)}, {"start_time", a}, {"end_time", b}});
      }
      rec["days"] = days;
    }
    if (ev.radius_m) rec["radius_m"] = *ev.radius_m;
    if (ev.pre_buffer_min) rec["pre_buffer_min"] = ev.pre_buffer_min;
    if (ev.post_buffer_min) rec["post_buffer_min"] = ev.post_buffer_min;
    if (ev.detection_window_min != kDefaultDetectionWindowMin) {
      rec["detection_window_min"] = ev.detection_window_min;
    }
    if (!ev.description.empty()) rec["description"] = ev.description;
    if (!ev.sources.empty()) rec["sources"] = ev.sources;
    arr.push_back(std::move(rec));
  }
  return arr;
}

void save_dbue(const std::filesystem::path& path, const std::vector<UncommonEvent>& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << dbue_to_json(events).dump(2) << '\n';
}

}  // namespace urbanpulse
