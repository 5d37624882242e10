#include "urbanpulse/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "urbanpulse/error.hpp"

namespace urbanpulse {
namespace {

using nlohmann::json;

double bump(double hour, double center, double width) {
  double d = std::abs(hour - center);
  d = std::min(d, 24.0 - d);
  return std::exp(-d * d / (2.0 * width * width));
}

double raw_urban_shape(int m) {
  const int day = m / static_cast<int>(kMinutesPerDay);  // 0 = Monday
  const double hour = static_cast<double>(m % kMinutesPerDay) / 60.0;
  const bool weekend = day >= 5;
  const double shift = weekend ? 1.5 : 0.0;
  const double scale = weekend ? 0.8 : 1.0;
  return 0.12 + scale * (1.1 * bump(hour, 9.0 + shift, 1.5) + 1.3 * bump(hour, 13.0 + shift, 2.5) +
                         1.5 * bump(hour, 18.5 + shift, 2.0) + 0.4 * bump(hour, 22.0, 1.5));
}

const std::array<double, kMinutesPerWeek>& urban_table() {
  static const auto table = [] {
    std::array<double, kMinutesPerWeek> t{};
    double sum = 0.0;
    for (int m = 0; m < kMinutesPerWeek; ++m) sum += (t[static_cast<std::size_t>(m)] = raw_urban_shape(m));
    const double mean = sum / kMinutesPerWeek;
    for (auto& v : t) v /= mean;
    return t;
  }();
  return table;
}

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

int draw_count(std::mt19937_64& rng, double lambda, const TrafficProfile& profile) {
  if (!(lambda > 0.0)) return 0;
  double mean = lambda;
  if (profile.noise == NoiseFamily::kNegativeBinomial && profile.dispersion > 1.0) {
    // Gamma-Poisson mixture with variance = dispersion * mean.
    const double scale = profile.dispersion - 1.0;
    boost::random::gamma_distribution<double> gamma(lambda / scale, scale);
    mean = gamma(rng);
    if (!(mean > 0.0)) return 0;
  }
  boost::random::poisson_distribution<int, double> poisson(mean);
  return poisson(rng);
}

double read_number(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j.at(key).get<double>() : fallback;
}

}  // namespace

double weekly_shape(ProfileShape shape, int minute_of_week) {
  if (shape == ProfileShape::kFlat) return 1.0;
  return urban_table()[static_cast<std::size_t>(minute_of_week)];
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double cell_base_rate(const TrafficProfile& profile, std::size_t cell_index, std::uint64_t seed) {
  const double u = unit_uniform(derive_seed(seed, 0xCE11000000ull + cell_index));
  return profile.base_rate_min + u * (profile.base_rate_max - profile.base_rate_min);
}

double nominal_intensity(const TrafficProfile& profile, std::size_t cell_index,
                         std::size_t service_index, Minute t, std::uint64_t seed) {
  return cell_base_rate(profile, cell_index, seed) * profile.services.at(service_index).share *
         weekly_shape(profile.shape, minute_of_week(t));
}

GeoPoint offset_m(GeoPoint origin, double north_m, double east_m) {
  constexpr double kMetersPerDegree = 6371008.8 * std::numbers::pi / 180.0;
  return {origin.lat + north_m / kMetersPerDegree,
          origin.lon + east_m / (kMetersPerDegree * std::cos(origin.lat * std::numbers::pi / 180.0))};
}

CellRegistry make_grid(const GridSpec& grid) {
  std::vector<CellSite> sites;
  int k = 0;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c, ++k) {
      char id[16];
      std::snprintf(id, sizeof id, "c%03d", k);
      sites.push_back({id, offset_m(grid.origin, r * grid.spacing_m, c * grid.spacing_m)});
    }
  }
  return CellRegistry(std::move(sites));
}

ActivityCube gen_nominal(const TrafficProfile& profile, const CellRegistry& cells, Minute start,
                         int weeks, std::uint64_t seed) {
  if (weeks < 1) throw SpecError("scenario needs at least one week");
  std::vector<std::string> cell_ids, service_names;
  for (const auto& s : cells.sites()) cell_ids.push_back(s.id);
  for (const auto& s : profile.services) service_names.push_back(s.name);
  const MinuteRange span{start, start + weeks * kMinutesPerWeek};
  ActivityCube cube(cell_ids, service_names, span);
  for (std::size_t c = 0; c < cell_ids.size(); ++c) {
    for (std::size_t s = 0; s < service_names.size(); ++s) {
      std::mt19937_64 rng(derive_seed(seed, (static_cast<std::uint64_t>(c) << 16) + s));
      boost::random::normal_distribution<double> jitter_dist(0.0, 1.0);
      std::vector<double> jitter(static_cast<std::size_t>(weeks));
      for (auto& j : jitter) j = std::exp(profile.weekly_jitter * jitter_dist(rng));
      auto series = cube.series(c, s);
      for (std::size_t i = 0; i < series.size(); ++i) {
        const Minute t = span.begin + static_cast<Minute>(i);
        const double lambda = nominal_intensity(profile, c, s, t, seed) *
                              jitter[static_cast<std::size_t>(i / kMinutesPerWeek)];
        series[i] = draw_count(rng, lambda, profile);
      }
    }
  }
  return cube;
}

double event_kernel(const EventSpec& spec, double distance_m, Minute t) {
  const Minute age = t - spec.onset;
  if (age < 0 || age >= spec.duration_min) return 0.0;
  const double spatial = std::exp(-distance_m / spec.rho_m);
  double temporal = 0.0;
  if (spec.shape == EventShape::kJumpDecay) {
    temporal = std::exp(-static_cast<double>(age) / spec.decay_min);
  } else {
    const double half = spec.duration_min / 2.0;
    temporal = std::max(0.0, 1.0 - std::abs(static_cast<double>(age) - half) / half);
  }
  return spec.magnitude * spatial * temporal;
}

InjectionResult inject_events(const ActivityCube& cube, const std::vector<EventSpec>& specs,
                              const CellRegistry& cells, const TrafficProfile& profile,
                              std::uint64_t seed) {
  InjectionResult result{cube, ActivityCube(cube.cells(), cube.services(), cube.span()), {}, {}};
  for (std::size_t c = 0; c < cube.cell_count(); ++c) {
    for (std::size_t s = 0; s < cube.service_count(); ++s) {
      auto dst = result.injected.series(c, s);
      std::fill(dst.begin(), dst.end(), 0);
    }
  }
  for (const auto& spec : specs) {
    if (!(spec.magnitude >= 0.0)) throw ValidationError("event '" + spec.id + "' has negative magnitude");
    if (spec.duration_min < 1) throw ValidationError("event '" + spec.id + "' lasts less than a minute");
    if (!cube.span().contains(spec.onset) || spec.onset + spec.duration_min > cube.span().end) {
      throw SpecError("event '" + spec.id + "' window leaves the cube span");
    }
    bool near = false;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto& site = cells.sites()[k];
      const double d = haversine_m(spec.epicenter, site.location);
      near = near || d <= 3.0 * spec.rho_m;
      const auto c = cube.find_cell(site.id);
      if (!c) continue;
      for (std::size_t s = 0; s < cube.service_count(); ++s) {
        std::size_t profile_service = s;
        for (std::size_t p = 0; p < profile.services.size(); ++p) {
          if (profile.services[p].name == cube.services()[s]) profile_service = p;
        }
        const auto w = spec.service_weights.find(cube.services()[s]);
        const double weight = w == spec.service_weights.end() ? 1.0 : w->second;
        for (Minute t = spec.onset; t < spec.onset + spec.duration_min; ++t) {
          const double extra =
              event_kernel(spec, d, t) * weight * nominal_intensity(profile, k, profile_service, t, seed);
          const auto add = static_cast<ActivityCube::Count>(std::lround(extra));
          if (add <= 0 || !cube.at(*c, s, t)) continue;
          result.cube.add(*c, s, t, add);
          result.injected.add(*c, s, t, add);
        }
      }
    }
    if (!near) {
      result.warnings.push_back("event '" + spec.id + "' has no antenna within 3 rho of its epicenter");
    }
    UncommonEvent ev;
    ev.id = spec.id;
    ev.label = spec.label.empty()
                   ? (spec.shape == EventShape::kJumpDecay ? "synthetic jump_decay" : "synthetic gradual_ramp")
                   : spec.label;
    ev.epicenters = {spec.epicenter};
    ev.start = spec.onset;
    if (spec.shape == EventShape::kGradualRamp) ev.end = spec.onset + spec.duration_min - 1;
    ev.radius_m = spec.gt_radius_m;
    ev.pre_buffer_min = spec.pre_buffer_min;
    ev.post_buffer_min = spec.post_buffer_min;
    char desc[96];
    std::snprintf(desc, sizeof desc, "injected magnitude %.3g, rho %.0f m, %d min", spec.magnitude,
                  spec.rho_m, spec.duration_min);
    ev.description = desc;
    result.events.push_back(std::move(ev));
  }
  return result;
}

std::vector<EventSpec> random_events(const RandomEventParams& params, const CellRegistry& cells,
                                     MinuteRange span, double spacing_m, std::uint64_t seed) {
  if (cells.size() == 0) throw SpecError("random events need at least one antenna");
  std::mt19937_64 rng(derive_seed(seed, 0xE7E7E7ull));
  boost::random::uniform_01<double> uni;
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  std::vector<EventSpec> out;
  for (int i = 0; i < params.count; ++i) {
    EventSpec spec;
    char id[16];
    std::snprintf(id, sizeof id, "ev%03d", i);
    spec.id = id;
    spec.shape = uni(rng) < params.jump_fraction ? EventShape::kJumpDecay : EventShape::kGradualRamp;
    spec.magnitude = params.magnitude_min + uni(rng) * (params.magnitude_max - params.magnitude_min);
    const auto anchor = std::min(cells.size() - 1, static_cast<std::size_t>(uni(rng) * static_cast<double>(cells.size())));
    const double limit = 0.35 * spacing_m;
    const double dn = std::clamp(0.2 * spacing_m * normal(rng), -limit, limit);
    const double de = std::clamp(0.2 * spacing_m * normal(rng), -limit, limit);
    spec.epicenter = offset_m(cells.sites()[anchor].location, dn, de);
    spec.duration_min = spec.shape == EventShape::kJumpDecay
                            ? params.jump_duration_min
                            : params.ramp_duration_min_lo +
                                  static_cast<int>(uni(rng) * (params.ramp_duration_min_hi - params.ramp_duration_min_lo));
    const Minute lo = span.begin + params.margin_min;
    const Minute hi = span.end - params.margin_min - spec.duration_min;
    if (hi <= lo) throw SpecError("scenario span too short for random events");
    spec.onset = lo + static_cast<Minute>(uni(rng) * static_cast<double>(hi - lo));
    spec.rho_m = params.rho_m;
    spec.gt_radius_m = params.gt_radius_m;
    spec.decay_min = params.decay_min;
    spec.post_buffer_min = params.post_buffer_min;
    out.push_back(std::move(spec));
  }
  return out;
}

Scenario parse_scenario(const json& doc) {
  Scenario sc;
  try {
    sc.seed = doc.value("seed", std::uint64_t{1});
    sc.start = parse_minute(doc.value("start", std::string("2019-03-18T00:00Z")));
    sc.weeks = doc.value("weeks", 8);
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      sc.grid.rows = g.value("rows", sc.grid.rows);
      sc.grid.cols = g.value("cols", sc.grid.cols);
      sc.grid.spacing_m = read_number(g, "spacing_m", sc.grid.spacing_m);
      if (g.contains("origin")) {
        sc.grid.origin = {g.at("origin").at("lat").get<double>(), g.at("origin").at("lon").get<double>()};
      }
    }
    if (doc.contains("profile")) {
      const auto& p = doc.at("profile");
      const auto shape = p.value("shape", std::string("urban"));
      if (shape == "urban") {
        sc.profile.shape = ProfileShape::kUrban;
      } else if (shape == "flat") {
        sc.profile.shape = ProfileShape::kFlat;
      } else {
        throw ValidationError("unknown profile shape '" + shape + "'");
      }
      sc.profile.base_rate_min = read_number(p, "base_rate_min", sc.profile.base_rate_min);
      sc.profile.base_rate_max = read_number(p, "base_rate_max", sc.profile.base_rate_max);
      sc.profile.weekly_jitter = read_number(p, "weekly_jitter", sc.profile.weekly_jitter);
      sc.profile.dispersion = read_number(p, "dispersion", sc.profile.dispersion);
      const auto noise = p.value("noise", std::string("negbin"));
      if (noise == "negbin") {
        sc.profile.noise = NoiseFamily::kNegativeBinomial;
      } else if (noise == "poisson") {
        sc.profile.noise = NoiseFamily::kPoisson;
      } else {
        throw ValidationError("unknown noise family '" + noise + "'");
      }
      if (p.contains("services")) {
        sc.profile.services.clear();
        for (const auto& s : p.at("services")) {
          sc.profile.services.push_back({s.at("name").get<std::string>(), read_number(s, "share", 1.0)});
        }
      }
    }
    if (doc.contains("events")) {
      for (const auto& e : doc.at("events")) {
        EventSpec spec;
        spec.id = e.at("id").get<std::string>();
        spec.label = e.value("label", std::string());
        const auto shape = e.value("shape", std::string("jump_decay"));
        if (shape == "jump_decay") {
          spec.shape = EventShape::kJumpDecay;
        } else if (shape == "gradual_ramp") {
          spec.shape = EventShape::kGradualRamp;
        } else {
          throw ValidationError("unknown event shape '" + shape + "'");
        }
        spec.magnitude = read_number(e, "magnitude", spec.magnitude);
        spec.epicenter = {e.at("epicenter").at("lat").get<double>(), e.at("epicenter").at("lon").get<double>()};
        spec.rho_m = read_number(e, "rho_m", spec.rho_m);
        spec.onset = parse_minute(e.at("onset").get<std::string>());
        spec.duration_min = e.value("duration_min", spec.duration_min);
        spec.decay_min = read_number(e, "decay_min", spec.decay_min);
        if (e.contains("service_weights")) {
          spec.service_weights = e.at("service_weights").get<std::map<std::string, double>>();
        }
        spec.gt_radius_m = read_number(e, "gt_radius_m", spec.gt_radius_m);
        spec.pre_buffer_min = e.value("pre_buffer_min", 0);
        spec.post_buffer_min = e.value("post_buffer_min", 0);
        sc.events.push_back(std::move(spec));
      }
    }
    if (doc.contains("random_events")) {
      const auto& r = doc.at("random_events");
      RandomEventParams rp;
      rp.count = r.value("count", rp.count);
      rp.jump_fraction = read_number(r, "jump_fraction", rp.jump_fraction);
      rp.magnitude_min = read_number(r, "magnitude_min", rp.magnitude_min);
      rp.magnitude_max = read_number(r, "magnitude_max", rp.magnitude_max);
      rp.jump_duration_min = r.value("jump_duration_min", rp.jump_duration_min);
      rp.ramp_duration_min_lo = r.value("ramp_duration_min_lo", rp.ramp_duration_min_lo);
      rp.ramp_duration_min_hi = r.value("ramp_duration_min_hi", rp.ramp_duration_min_hi);
      rp.rho_m = read_number(r, "rho_m", rp.rho_m);
      rp.gt_radius_m = read_number(r, "gt_radius_m", rp.gt_radius_m);
      rp.decay_min = read_number(r, "decay_min", rp.decay_min);
      rp.post_buffer_min = r.value("post_buffer_min", rp.post_buffer_min);
      rp.margin_min = r.value("margin_min", rp.margin_min);
      sc.random = rp;
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  try {
    return parse_scenario(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

ScenarioOutput generate_scenario(const Scenario& sc) {
  ScenarioOutput out;
  out.cells = make_grid(sc.grid);
  const ActivityCube nominal = gen_nominal(sc.profile, out.cells, sc.start, sc.weeks, sc.seed);
  out.specs = sc.events;
  if (sc.random) {
    const auto extra = random_events(*sc.random, out.cells, nominal.span(), sc.grid.spacing_m, sc.seed);
    out.specs.insert(out.specs.end(), extra.begin(), extra.end());
  }
  auto injected = inject_events(nominal, out.specs, out.cells, sc.profile, sc.seed);
  out.activity = std::move(injected.cube);
  out.injected = std::move(injected.injected);
  out.events = std::move(injected.events);
  out.warnings = std::move(injected.warnings);
  return out;
}

}  // namespace urbanpulse
