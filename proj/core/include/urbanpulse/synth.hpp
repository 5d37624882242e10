#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanpulse/activity.hpp"
#include "urbanpulse/dbue.hpp"

namespace urbanpulse {

enum class NoiseFamily { kPoisson, kNegativeBinomial };
enum class ProfileShape { kUrban, kFlat };

struct ServiceShare {
  std::string name;
  double share = 1.0;  // multiplier on the cell base rate
};

// Nominal intensity lambda(cell, service, minute-of-week) =
// cell base rate * service share * weekly shape. Counts are drawn around
// lambda times a per-week multiplicative jitter.
struct TrafficProfile {
  ProfileShape shape = ProfileShape::kUrban;
  double base_rate_min = 2.0;  // events/minute at the weekly shape's mean
  double base_rate_max = 20.0;
  double weekly_jitter = 0.05;  // stddev of the log jitter
  NoiseFamily noise = NoiseFamily::kNegativeBinomial;
  // Variance-to-mean ratio of the negative binomial (> 1).
  double dispersion = 1.5;
  std::vector<ServiceShare> services = {
      {"call3g", 0.5}, {"call4g", 1.0}, {"sms3g", 0.4}, {"sms4g", 0.8}};
};

// Weekly activity shape, mean 1 over the week for kUrban.
double weekly_shape(ProfileShape shape, int minute_of_week);

// Base rate of the cell at `cell_index`, deterministic in (seed, index).
double cell_base_rate(const TrafficProfile& profile, std::size_t cell_index, std::uint64_t seed);

// Noise-free intensity.
double nominal_intensity(const TrafficProfile& profile, std::size_t cell_index,
                         std::size_t service_index, Minute t, std::uint64_t seed);

// SplitMix64 mixing of the master seed with a stream id.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct GridSpec {
  int rows = 5;
  int cols = 10;
  double spacing_m = 400.0;
  GeoPoint origin{48.8530, 2.3499};
};

// Antennas "c000", "c001", ... on a regular grid, row-major from `origin`.
CellRegistry make_grid(const GridSpec& grid);

// Offsets a point by meters north/east (local flat-earth approximation).
GeoPoint offset_m(GeoPoint origin, double north_m, double east_m);

// Fully deterministic in `seed`; each (cell, service) uses its own stream.
ActivityCube gen_nominal(const TrafficProfile& profile, const CellRegistry& cells, Minute start,
                         int weeks, std::uint64_t seed);

enum class EventShape { kJumpDecay, kGradualRamp };

struct EventSpec {
  std::string id;
  std::string label;
  EventShape shape = EventShape::kJumpDecay;
  double magnitude = 5.0;  // multiples of the local nominal intensity
  GeoPoint epicenter;
  double rho_m = 500.0;     // spatial decay length: weight exp(-d / rho)
  Minute onset = 0;
  int duration_min = 120;
  double decay_min = 30.0;  // jump-decay time constant
  // Per-service weight; services not listed get weight 1.
  std::map<std::string, double> service_weights;
  double gt_radius_m = 500.0;
  int pre_buffer_min = 0;
  int post_buffer_min = 0;
};

// Injected expected extra intensity (before rounding) at distance d and
// time t for a unit local intensity.
double event_kernel(const EventSpec& spec, double distance_m, Minute t);

struct InjectionResult {
  ActivityCube cube;
  ActivityCube injected;  // the added integer component, 0 where untouched
  std::vector<UncommonEvent> events;
  std::vector<std::string> warnings;
};

// Adds round(magnitude * lambda * exp(-d/rho) * temporal shape * weight) to
// every present slot. Jump-decay events are recorded with a start only
// (15-minute detection window); ramps carry their end.
InjectionResult inject_events(const ActivityCube& cube, const std::vector<EventSpec>& specs,
                              const CellRegistry& cells, const TrafficProfile& profile,
                              std::uint64_t seed);

// Random event placement for benchmarks.
struct RandomEventParams {
  int count = 30;
  double jump_fraction = 0.5;
  double magnitude_min = 5.0;
  double magnitude_max = 10.0;
  int jump_duration_min = 120;
  int ramp_duration_min_lo = 60;
  int ramp_duration_min_hi = 240;
  double rho_m = 500.0;
  double gt_radius_m = 500.0;
  double decay_min = 30.0;
  int post_buffer_min = 0;
  int margin_min = 360;  // keep onsets away from the span edges
};

std::vector<EventSpec> random_events(const RandomEventParams& params, const CellRegistry& cells,
                                     MinuteRange span, double spacing_m, std::uint64_t seed);

// Whole scenario as read from a JSON scenario file.
struct Scenario {
  std::uint64_t seed = 1;
  Minute start = 0;
  int weeks = 8;
  GridSpec grid;
  TrafficProfile profile;
  std::vector<EventSpec> events;
  std::optional<RandomEventParams> random;
};

Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::filesystem::path& path);

struct ScenarioOutput {
  CellRegistry cells;
  ActivityCube activity;
  ActivityCube injected;
  std::vector<UncommonEvent> events;
  std::vector<EventSpec> specs;
  std::vector<std::string> warnings;
};

ScenarioOutput generate_scenario(const Scenario& scenario);

}  // namespace urbanpulse
