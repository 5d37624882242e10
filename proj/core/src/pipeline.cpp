#include "urbanpulse/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "urbanpulse/active_pairs.hpp"
#include "urbanpulse/error.hpp"
#include "urbanpulse/parallel.hpp"

namespace urbanpulse {
namespace {

using nlohmann::json;

std::string range_to_iso(Minute t) { return format_minute(t); }

struct PairRef {
  std::size_t model = 0;
  std::size_t cell = 0;     // index in the scored cube
  std::size_t service = 0;  // index in the run's service list
  std::size_t cube_service = 0;
};

// Groups model indices by scored-cube cell so that fusion can run per cell.
template <typename Model>
std::vector<std::vector<PairRef>> group_by_cell(const std::vector<Model>& models,
                                                const TrainedModels& trained, const ActivityCube& cube) {
  std::vector<std::vector<PairRef>> groups(cube.cell_count());
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto c = cube.find_cell(models[i].cell);
    const auto cs = cube.find_service(models[i].service);
    if (!c || !cs) continue;
    const auto s = static_cast<std::size_t>(
        std::find(trained.services.begin(), trained.services.end(), models[i].service) - trained.services.begin());
    groups[*c].push_back({i, *c, s, *cs});
  }
  return groups;
}

ScoreGrid empty_grid(const TrainedModels& trained, const ActivityCube& cube) {
  ScoreGrid grid;
  grid.cells = cube.cells();
  grid.services = trained.services;
  grid.span = cube.span();
  const std::size_t n = cube.cell_count() * static_cast<std::size_t>(cube.length());
  grid.log_score.assign(n, 0.0);
  grid.contrib.assign(n, 0);
  return grid;
}

void accumulate(ScoreGrid& grid, std::size_t cell, std::size_t i, std::size_t service, double log_l) {
  const std::size_t k = cell * static_cast<std::size_t>(grid.span.length()) + i;
  grid.log_score[k] += log_l;
  grid.contrib[k] |= ServiceMask{1} << service;
}

// Contiguous stretches of present minutes, split wherever data is missing for
// at least a day (the held-out interval of a middle fold, outages).
std::vector<MinuteRange> present_segments(std::span<const ActivityCube::Count> series, MinuteRange span) {
  std::vector<MinuteRange> out;
  std::optional<Minute> begin;
  Minute last = 0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i] == ActivityCube::kMissing) continue;
    const Minute t = span.begin + static_cast<Minute>(i);
    if (begin && t - last > kMinutesPerDay) {
      out.push_back({*begin, last + 1});
      begin.reset();
    }
    if (!begin) begin = t;
    last = t;
  }
  if (begin) out.push_back({*begin, last + 1});
  return out;
}

// Chart z scores over the training minutes. A chart decayed across a long gap
// holds almost no weight, so each segment gets its own warm-up.
std::vector<std::optional<AdaptiveScore>> training_z(const ForecastModel& model, const ChartParams& chart_params,
                                                     std::span<const ActivityCube::Count> series, MinuteRange span,
                                                     const HolidayCalendar& holidays, int warmup_days) {
  std::vector<std::optional<AdaptiveScore>> out(series.size());
  for (const auto& seg : present_segments(series, span)) {
    const MinuteRange warm{seg.begin, std::min(seg.end, seg.begin + warmup_days * kMinutesPerDay)};
    if (warm.end >= seg.end) continue;
    PositionedChart chart = seed_chart(model, series, span, warm, holidays, chart_params.half_life);
    const auto from = static_cast<std::size_t>(warm.end - span.begin);
    const auto to = static_cast<std::size_t>(seg.end - span.begin);
    const auto z = adaptive_score_series(model, series.subspan(from, to - from), {warm.end, seg.end}, holidays,
                                         chart_params, chart);
    std::copy(z.begin(), z.end(), out.begin() + static_cast<std::ptrdiff_t>(from));
  }
  return out;
}

// Window of training residuals used to seed the chart for a test interval.
MinuteRange seed_window(std::span<const ActivityCube::Count> series, MinuteRange span, MinuteRange test,
                        int days) {
  const Minute length = days * kMinutesPerDay;
  if (test.begin - span.begin >= length) return {test.begin - length, test.begin};
  Minute last = span.begin;
  for (std::size_t i = series.size(); i-- > 0;) {
    if (series[i] != ActivityCube::kMissing) {
      last = span.begin + static_cast<Minute>(i) + 1;
      break;
    }
  }
  return {last - length, last};
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

constexpr char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

json chart_state_json(const PositionedChart& c) {
  return {{"s0", c.state.s0}, {"s1", c.state.s1}, {"s2", c.state.s2},
          {"last", range_to_iso(c.last)}, {"started", c.started}};
}

void check_kind(const json& doc, const char* kind) {
  if (doc.value("version", 0) != kArtifactVersion) throw ValidationError("unsupported model version");
  if (doc.value("kind", std::string()) != kind) {
    throw ValidationError(std::string("expected a ") + kind + " model document");
  }
}

json deviation_json(const DeviationModel& d) {
  return {{"h", d.h()},
          {"theta", d.threshold()},
          {"p_tail", d.p_tail()},
          {"mean", d.mean()},
          {"stddev", d.stddev()},
          {"gamma_shape", d.tail().shape},
          {"gamma_scale", d.tail().scale},
          {"exponential_fallback", d.tail().exponential_fallback},
          {"mle_iterations", d.tail().mle_iterations},
          {"sample_size", d.sample_size()},
          {"exceedances", d.exceedance_count()},
          {"sorted_sample", encode_doubles({d.sorted_sample().begin(), d.sorted_sample().end()})}};
}

DeviationModel deviation_from_json(const json& j) {
  auto sample = decode_doubles(j.at("sorted_sample").get<std::string>());
  if (sample.size() != j.at("sample_size").get<std::size_t>()) {
    throw ValidationError("deviation sample size does not match its header");
  }
  GammaFit tail{j.at("gamma_shape").get<double>(), j.at("gamma_scale").get<double>(),
                j.at("exponential_fallback").get<bool>(), j.value("mle_iterations", 0)};
  return DeviationModel::from_parts(std::move(sample), j.at("h").get<double>(), j.at("theta").get<double>(),
                                    j.at("p_tail").get<double>(), tail);
}

}  // namespace

std::string_view method_name(Method m) { return m == Method::kSignature ? "signature" : "adaptive"; }

Method parse_method(std::string_view text) {
  if (text == "signature") return Method::kSignature;
  if (text == "adaptive") return Method::kAdaptive;
  throw ParseError("unknown method '" + std::string(text) + "' (expected signature|adaptive)");
}

json RunConfig::to_json() const {
  json ranges = json::array();
  for (const auto& r : folds.test_ranges) ranges.push_back({{"begin", range_to_iso(r.begin)}, {"end", range_to_iso(r.end)}});
  return {
      {"method", method_name(method)},
      {"services", services},
      {"folds", {{"count", folds.count}, {"test_ranges", ranges}}},
      {"min_mean_rate", min_mean_rate},
      {"signature",
       {{"h", deviation.h},
        {"butterworth_order", signature.filter.order},
        {"cutoff_per_min", signature.filter.cutoff},
        {"min_weeks", signature.min_weeks},
        {"min_samples", deviation.min_samples},
        {"min_gamma_exceedances", deviation.min_gamma_exceedances},
        {"max_mle_iterations", deviation.max_mle_iterations}}},
      {"adaptive",
       {{"half_life_min", adaptive.half_life},
        {"h", adaptive.h},
        {"sigma_floor_abs", adaptive.sigma_floor_abs},
        {"sigma_floor_rel", adaptive.sigma_floor_rel},
        {"fourier_order", adaptive.forecaster.fourier_order},
        {"daily_order", adaptive.forecaster.daily_order},
        {"knots_per_month", adaptive.forecaster.knots_per_month},
        {"ridge", adaptive.forecaster.ridge},
        {"min_weeks", adaptive.forecaster.min_weeks},
        {"warmup_days", adaptive.warmup_days}}},
      {"calibration", {{"min_training_minutes", calibration.min_training_minutes}}},
      {"holidays", holidays},
      {"sensitivity", sensitivity_name(sensitivity)},
      {"seed", seed},
      {"evaluation",
       {{"level", evaluation.level},
        {"alarms_per_event", evaluation.alarms_per_event},
        {"default_radius_m", evaluation.default_radius_m},
        {"exclude_undetectable", evaluation.exclude_undetectable}}},
      {"paths", {{"activity", paths.activity}, {"cells", paths.cells}, {"dbue", paths.dbue}, {"out_dir", paths.out_dir}}},
  };
}

RunConfig RunConfig::from_json(const json& doc) {
  RunConfig c;
  try {
    if (!doc.is_object()) throw ValidationError("run config must be a JSON object");
    if (doc.contains("method")) c.method = parse_method(doc.at("method").get<std::string>());
    if (doc.contains("services")) c.services = doc.at("services").get<std::vector<std::string>>();
    if (doc.contains("folds")) {
      const auto& f = doc.at("folds");
      c.folds.count = f.value("count", c.folds.count);
      if (f.contains("test_ranges")) {
        for (const auto& r : f.at("test_ranges")) {
          c.folds.test_ranges.push_back({parse_minute(r.at("begin").get<std::string>()),
                                         parse_minute(r.at("end").get<std::string>())});
        }
      }
    }
    c.min_mean_rate = doc.value("min_mean_rate", c.min_mean_rate);
    if (doc.contains("signature")) {
      const auto& s = doc.at("signature");
      c.deviation.h = s.value("h", c.deviation.h);
      c.signature.filter.order = s.value("butterworth_order", c.signature.filter.order);
      c.signature.filter.cutoff = s.value("cutoff_per_min", c.signature.filter.cutoff);
      c.signature.min_weeks = s.value("min_weeks", c.signature.min_weeks);
      c.deviation.min_samples = s.value("min_samples", c.deviation.min_samples);
      c.deviation.min_gamma_exceedances = s.value("min_gamma_exceedances", c.deviation.min_gamma_exceedances);
      c.deviation.max_mle_iterations = s.value("max_mle_iterations", c.deviation.max_mle_iterations);
    }
    if (doc.contains("adaptive")) {
      const auto& a = doc.at("adaptive");
      c.adaptive.half_life = a.value("half_life_min", c.adaptive.half_life);
      c.adaptive.h = a.value("h", c.adaptive.h);
      c.adaptive.sigma_floor_abs = a.value("sigma_floor_abs", c.adaptive.sigma_floor_abs);
      c.adaptive.sigma_floor_rel = a.value("sigma_floor_rel", c.adaptive.sigma_floor_rel);
      c.adaptive.forecaster.fourier_order = a.value("fourier_order", c.adaptive.forecaster.fourier_order);
      c.adaptive.forecaster.daily_order = a.value("daily_order", c.adaptive.forecaster.daily_order);
      c.adaptive.forecaster.knots_per_month = a.value("knots_per_month", c.adaptive.forecaster.knots_per_month);
      c.adaptive.forecaster.ridge = a.value("ridge", c.adaptive.forecaster.ridge);
      c.adaptive.forecaster.min_weeks = a.value("min_weeks", c.adaptive.forecaster.min_weeks);
      c.adaptive.warmup_days = a.value("warmup_days", c.adaptive.warmup_days);
    }
    if (doc.contains("calibration")) {
      c.calibration.min_training_minutes =
          doc.at("calibration").value("min_training_minutes", c.calibration.min_training_minutes);
    }
    if (doc.contains("holidays")) c.holidays = doc.at("holidays").get<std::vector<std::string>>();
    if (doc.contains("sensitivity")) c.sensitivity = parse_sensitivity(doc.at("sensitivity").get<std::string>());
    c.seed = doc.value("seed", c.seed);
    if (doc.contains("evaluation")) {
      const auto& e = doc.at("evaluation");
      c.evaluation.level = e.value("level", c.evaluation.level);
      c.evaluation.alarms_per_event = e.value("alarms_per_event", c.evaluation.alarms_per_event);
      c.evaluation.default_radius_m = e.value("default_radius_m", c.evaluation.default_radius_m);
      c.evaluation.exclude_undetectable = e.value("exclude_undetectable", c.evaluation.exclude_undetectable);
    }
    if (doc.contains("paths")) {
      const auto& p = doc.at("paths");
      c.paths.activity = p.value("activity", c.paths.activity);
      c.paths.cells = p.value("cells", c.paths.cells);
      c.paths.dbue = p.value("dbue", c.paths.dbue);
      c.paths.out_dir = p.value("out_dir", c.paths.out_dir);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("run config: ") + e.what());
  }
  if (c.min_mean_rate < 0) throw ValidationError("min_mean_rate must be >= 0");
  if (!(c.adaptive.half_life > 0)) throw ValidationError("half-life must be positive");
  if (c.evaluation.level < 1 || c.evaluation.level > 3) throw ValidationError("evaluation level must be 1..3");
  for (const auto& d : c.holidays) parse_date(d);
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string RunConfig::fingerprint() const {
  json j = to_json();
  j.erase("paths");
  j.erase("sensitivity");
  j.erase("evaluation");
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

std::vector<std::string> resolve_services(const RunConfig& config, const ActivityCube& data) {
  if (config.services.empty()) return data.services();
  for (const auto& s : config.services) {
    if (!data.find_service(s)) throw NotFoundError("service '" + s + "' not present in activity data");
  }
  if (config.services.size() > kMaxServices) throw ValidationError("too many services for fusion");
  return config.services;
}

TrainedModels train_models(const ActivityCube& train, MinuteRange test_range, const RunConfig& config) {
  TrainedModels out;
  out.method = config.method;
  out.cells = train.cells();
  out.services = resolve_services(config, train);
  out.test_range = test_range;
  const ActivityCube data = train.with_services(out.services);
  const auto pairs = filter_active_pairs(data, config.min_mean_rate);
  for (std::size_t c = 0; c < data.cell_count(); ++c) {
    for (std::size_t s = 0; s < data.service_count(); ++s) {
      if (!std::binary_search(pairs.begin(), pairs.end(), PairIndex{c, s})) {
        out.skipped.push_back({data.cells()[c], data.services()[s], "below minimum mean rate"});
      }
    }
  }

  const HolidayCalendar holidays = HolidayCalendar::from_dates(config.holidays);
  std::vector<std::optional<SignaturePairModel>> sig(pairs.size());
  std::vector<std::optional<AdaptivePairModel>> ada(pairs.size());
  std::vector<std::string> reasons(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) {
    const auto [c, s] = pairs[k];
    const auto series = data.series(c, s);
    try {
      if (config.method == Method::kSignature) {
        SignaturePairModel m{data.cells()[c], data.services()[s], {}, {}};
        m.signature = compute_weekly_signature(series, data.span(), config.signature);
        m.deviation = DeviationModel::fit(training_deviations(series, data.span(), m.signature), config.deviation);
        sig[k] = std::move(m);
      } else {
        AdaptivePairModel m;
        m.cell = data.cells()[c];
        m.service = data.services()[s];
        m.forecast = fit_forecaster(series, data.span(), holidays, config.adaptive.forecaster);
        m.training_mean = mean_rate(series);
        m.chart = {config.adaptive.half_life, config.adaptive.h,
                   sigma_floor_for(m.training_mean, config.adaptive.sigma_floor_abs, config.adaptive.sigma_floor_rel)};
        std::vector<double> z;
        for (const auto& score : training_z(m.forecast, m.chart, series, data.span(), holidays,
                                            config.adaptive.warmup_days)) {
          if (score) z.push_back(score->z);
        }
        m.z_model = DeviationModel::fit(std::move(z), config.deviation);
        m.seed = seed_chart(m.forecast, series, data.span(),
                            seed_window(series, data.span(), test_range, config.adaptive.warmup_days), holidays,
                            m.chart.half_life);
        ada[k] = std::move(m);
      }
    } catch (const InsufficientDataError& e) {
      reasons[k] = e.what();
    } catch (const DegenerateModelError& e) {
      reasons[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if (sig[k]) {
      out.signature.push_back(std::move(*sig[k]));
    } else if (ada[k]) {
      out.adaptive.push_back(std::move(*ada[k]));
    } else {
      out.skipped.push_back({data.cells()[pairs[k].cell], data.services()[pairs[k].service], reasons[k]});
    }
  }
  std::sort(out.skipped.begin(), out.skipped.end(), [](const SkippedPair& a, const SkippedPair& b) {
    return std::tie(a.cell, a.service) < std::tie(b.cell, b.service);
  });
  return out;
}

std::optional<LikelihoodScore> ScoreGrid::at(std::size_t cell, Minute t) const {
  if (!span.contains(t)) return std::nullopt;
  const std::size_t k = cell * static_cast<std::size_t>(span.length()) + static_cast<std::size_t>(t - span.begin);
  if (contrib[k] == 0) return std::nullopt;
  return LikelihoodScore{log_score[k], contrib[k]};
}

namespace {

ScoreGrid score_cube(const TrainedModels& models, const ActivityCube& cube, const RunConfig& config,
                     bool training) {
  ScoreGrid grid = empty_grid(models, cube);
  const HolidayCalendar holidays = HolidayCalendar::from_dates(config.holidays);
  if (models.method == Method::kSignature) {
    const auto groups = group_by_cell(models.signature, models, cube);
    parallel_for(groups.size(), [&](std::size_t c) {
      for (const auto& ref : groups[c]) {
        const auto& m = models.signature[ref.model];
        const auto series = cube.series(ref.cell, ref.cube_service);
        for (std::size_t i = 0; i < series.size(); ++i) {
          if (series[i] == ActivityCube::kMissing) continue;
          const int mow = minute_of_week(cube.span().begin + static_cast<Minute>(i));
          accumulate(grid, c, i, ref.service,
                     m.deviation.log_exceedance_likelihood(compute_deviation(series[i], m.signature, mow)));
        }
      }
    });
  } else {
    const auto groups = group_by_cell(models.adaptive, models, cube);
    parallel_for(groups.size(), [&](std::size_t c) {
      for (const auto& ref : groups[c]) {
        const auto& m = models.adaptive[ref.model];
        const auto series = cube.series(ref.cell, ref.cube_service);
        std::vector<std::optional<AdaptiveScore>> z;
        if (training) {
          z = training_z(m.forecast, m.chart, series, cube.span(), holidays, config.adaptive.warmup_days);
        } else {
          PositionedChart chart = m.seed;
          z = adaptive_score_series(m.forecast, series, cube.span(), holidays, m.chart, chart);
        }
        for (std::size_t i = 0; i < z.size(); ++i) {
          if (z[i]) accumulate(grid, c, i, ref.service, m.z_model.log_exceedance_likelihood(z[i]->z));
        }
      }
    });
  }
  return grid;
}

}  // namespace

ScoreGrid training_scores(const TrainedModels& models, const ActivityCube& train, const RunConfig& config) {
  return score_cube(models, train, config, true);
}

ScoreGrid detection_scores(const TrainedModels& models, const ActivityCube& test, const RunConfig& config) {
  return score_cube(models, test, config, false);
}

LevelThresholds calibrate_from_scores(const ScoreGrid& scores, const CalibrationParams& params) {
  std::map<std::string, std::vector<double>> per_cell;
  const auto n = static_cast<std::size_t>(scores.span.length());
  for (std::size_t c = 0; c < scores.cells.size(); ++c) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) {
      if (scores.contrib[c * n + i]) v.push_back(scores.log_score[c * n + i]);
    }
    if (!v.empty()) per_cell.emplace(scores.cells[c], std::move(v));
  }
  return calibrate_thresholds(per_cell, params);
}

std::vector<DetectedAnomaly> detect_alarms(const ScoreGrid& scores, const LevelThresholds& thresholds) {
  std::vector<const AntennaThresholds*> per_cell(scores.cells.size());
  for (std::size_t c = 0; c < scores.cells.size(); ++c) per_cell[c] = thresholds.find(scores.cells[c]);
  std::vector<DetectedAnomaly> out;
  const auto n = static_cast<std::size_t>(scores.span.length());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < scores.cells.size(); ++c) {
      const std::size_t k = c * n + i;
      if (!scores.contrib[k] || !per_cell[c]) continue;
      const int level = assign_level(scores.log_score[k], *per_cell[c]);
      if (level < 1) continue;
      out.push_back({scores.cells[c], scores.span.begin + static_cast<Minute>(i), level, scores.log_score[k],
                     scores.contrib[k]});
    }
  }
  return out;
}

FoldRun run_fold(const Fold& fold, const RunConfig& config) {
  FoldRun run;
  run.test_range = fold.test_range;
  run.models = train_models(fold.train, fold.test_range, config);
  run.thresholds = calibrate_from_scores(training_scores(run.models, fold.train, config), config.calibration);
  run.alarms = detect_alarms(detection_scores(run.models, fold.test, config), run.thresholds);
  return run;
}

// --- persistence -----------------------------------------------------------

std::string encode_doubles(const std::vector<double>& values) {
  std::string bytes(values.size() * 8, '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &values[i], 8);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::size_t rem = std::min<std::size_t>(3, bytes.size() - i);
    std::uint32_t chunk = 0;
    for (std::size_t k = 0; k < rem; ++k) chunk |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i + k])) << (16 - 8 * k);
    out += kB64[(chunk >> 18) & 63];
    out += kB64[(chunk >> 12) & 63];
    out += rem > 1 ? kB64[(chunk >> 6) & 63] : '=';
    out += rem > 2 ? kB64[chunk & 63] : '=';
  }
  return out;
}

std::vector<double> decode_doubles(const std::string& text) {
  if (text.size() % 4 != 0) throw ParseError("base64 payload length is not a multiple of 4");
  std::string bytes;
  bytes.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t chunk = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char ch = text[i + k];
      std::uint32_t v = 0;
      if (ch == '=') {
        ++pad;
      } else {
        const char* pos = std::strchr(kB64, ch);
        if (!pos || ch == '\0') throw ParseError("invalid base64 character");
        v = static_cast<std::uint32_t>(pos - kB64);
      }
      chunk = (chunk << 6) | v;
    }
    bytes += static_cast<char>((chunk >> 16) & 0xFF);
    if (pad < 2) bytes += static_cast<char>((chunk >> 8) & 0xFF);
    if (pad < 1) bytes += static_cast<char>(chunk & 0xFF);
  }
  if (bytes.size() % 8 != 0) throw ParseError("base64 payload is not a float64 array");
  std::vector<double> out(bytes.size() / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + static_cast<std::size_t>(b)])) << (8 * b);
    std::memcpy(&out[i], &bits, 8);
  }
  return out;
}

json signature_model_to_json(const SignaturePairModel& m) {
  return {{"version", kArtifactVersion},
          {"kind", "signature"},
          {"cell", m.cell},
          {"service", m.service},
          {"signature", encode_doubles(m.signature.values)},
          {"deviation", deviation_json(m.deviation)}};
}

SignaturePairModel signature_model_from_json(const json& doc) {
  check_kind(doc, "signature");
  SignaturePairModel m;
  m.cell = doc.at("cell").get<std::string>();
  m.service = doc.at("service").get<std::string>();
  m.signature.values = decode_doubles(doc.at("signature").get<std::string>());
  if (m.signature.values.size() != static_cast<std::size_t>(kMinutesPerWeek)) {
    throw ValidationError("signature must hold 10080 values");
  }
  m.deviation = deviation_from_json(doc.at("deviation"));
  return m;
}

json adaptive_model_to_json(const AdaptivePairModel& m) {
  const auto& f = m.forecast;
  return {{"version", kArtifactVersion},
          {"kind", "adaptive"},
          {"cell", m.cell},
          {"service", m.service},
          {"forecast",
           {{"origin", range_to_iso(f.origin)},
            {"time_scale_min", f.time_scale},
            {"knots", f.knots},
            {"harmonics", f.harmonics},
            {"intercept", f.intercept},
            {"slope", f.slope},
            {"hinge", f.hinge},
            {"fourier_cos", f.fourier_cos},
            {"fourier_sin", f.fourier_sin},
            {"holiday", f.holiday}}},
          {"chart", {{"half_life_min", m.chart.half_life}, {"h", m.chart.h}, {"sigma_floor", m.chart.sigma_floor}}},
          {"training_mean", m.training_mean},
          {"seed", chart_state_json(m.seed)},
          {"z_model", deviation_json(m.z_model)}};
}

AdaptivePairModel adaptive_model_from_json(const json& doc) {
  check_kind(doc, "adaptive");
  AdaptivePairModel m;
  m.cell = doc.at("cell").get<std::string>();
  m.service = doc.at("service").get<std::string>();
  const auto& f = doc.at("forecast");
  m.forecast.origin = parse_minute(f.at("origin").get<std::string>());
  m.forecast.time_scale = f.at("time_scale_min").get<double>();
  m.forecast.knots = f.at("knots").get<std::vector<double>>();
  m.forecast.intercept = f.at("intercept").get<double>();
  m.forecast.slope = f.at("slope").get<double>();
  m.forecast.hinge = f.at("hinge").get<std::vector<double>>();
  m.forecast.harmonics = f.at("harmonics").get<std::vector<int>>();
  m.forecast.fourier_cos = f.at("fourier_cos").get<std::vector<double>>();
  m.forecast.fourier_sin = f.at("fourier_sin").get<std::vector<double>>();
  m.forecast.holiday = f.at("holiday").get<double>();
  if (m.forecast.hinge.size() != m.forecast.knots.size() ||
      m.forecast.fourier_cos.size() != m.forecast.fourier_sin.size() ||
      m.forecast.harmonics.size() != m.forecast.fourier_cos.size()) {
    throw ValidationError("inconsistent forecaster coefficients");
  }
  const auto& c = doc.at("chart");
  m.chart = {c.at("half_life_min").get<double>(), c.at("h").get<double>(), c.at("sigma_floor").get<double>()};
  m.training_mean = doc.at("training_mean").get<double>();
  const auto& s = doc.at("seed");
  m.seed.state = {s.at("s0").get<double>(), s.at("s1").get<double>(), s.at("s2").get<double>()};
  m.seed.last = parse_minute(s.at("last").get<std::string>());
  m.seed.started = s.at("started").get<bool>();
  m.z_model = deviation_from_json(doc.at("z_model"));
  return m;
}

json thresholds_to_json(const LevelThresholds& thresholds) {
  json antennas = json::object();
  for (const auto& [cell, t] : thresholds.antennas) {
    json per = json::object();
    for (const auto s : kAllSensitivities) {
      const double v = t.threshold(s);
      per[std::string(sensitivity_name(s))] = std::isfinite(v) ? json(v) : json(nullptr);
    }
    antennas[cell] = {{"calibrated", t.calibrated}, {"training_minutes", t.training_minutes}, {"thresholds", per}};
  }
  json freq = json::object();
  for (const auto s : kAllSensitivities) freq[std::string(sensitivity_name(s))] = sensitivity_frequency(s);
  return {{"version", kArtifactVersion},
          {"score", "natural log of fused exceedance likelihood; alarm when score <= threshold"},
          {"frequencies_per_minute", freq},
          {"antennas", antennas}};
}

LevelThresholds thresholds_from_json(const json& doc) {
  if (doc.value("version", 0) != kArtifactVersion) throw ValidationError("unsupported thresholds version");
  LevelThresholds out;
  for (const auto& [cell, t] : doc.at("antennas").items()) {
    AntennaThresholds a;
    a.calibrated = t.at("calibrated").get<bool>();
    a.training_minutes = t.at("training_minutes").get<std::size_t>();
    for (const auto s : kAllSensitivities) {
      const auto& v = t.at("thresholds").at(std::string(sensitivity_name(s)));
      a.log_threshold[static_cast<std::size_t>(s)] = v.is_null() ? kNoThreshold : v.get<double>();
    }
    out.antennas.emplace(cell, a);
  }
  return out;
}

void write_alarms_csv(std::ostream& out, const std::vector<DetectedAnomaly>& alarms,
                      const std::vector<std::string>& services) {
  out << "minute,cell_id,level,score,services\n";
  char buf[40];
  for (const auto& a : alarms) {
    std::snprintf(buf, sizeof buf, "%.17g", a.score);
    out << format_minute(a.minute) << ',' << a.cell << ',' << a.level << ',' << buf << ','
        << service_label(a.services, services) << '\n';
  }
}

std::vector<DetectedAnomaly> read_alarms_csv(std::istream& in, const std::vector<std::string>& services) {
  std::string line;
  long line_no = 0;
  std::vector<DetectedAnomaly> out;
  if (!std::getline(in, line)) return out;
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "minute,cell_id,level,score,services") throw ParseError("unexpected alarm CSV header", 1);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw ParseError("alarm row needs 5 fields", line_no);
    DetectedAnomaly a;
    try {
      a.minute = parse_minute(f[0]);
      a.cell = f[1];
      a.level = std::stoi(f[2]);
      a.score = std::stod(f[3]);
    } catch (const std::exception& e) {
      throw ParseError(std::string("invalid alarm row: ") + e.what(), line_no);
    }
    std::stringstream labels(f[4]);
    while (std::getline(labels, field, '+')) {
      const auto it = std::find(services.begin(), services.end(), field);
      if (it == services.end()) throw ParseError("unknown service '" + field + "' in alarm row", line_no);
      a.services |= ServiceMask{1} << static_cast<std::size_t>(it - services.begin());
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::string model_file_name(const std::string& cell, const std::string& service) {
  std::string out;
  auto put = [&out](const std::string& s) {
    for (const unsigned char ch : s) {
      if (std::isalnum(ch) || ch == '-' || ch == '.' || ch == '_') {
        out += static_cast<char>(ch);
      } else {
        char buf[4];
        std::snprintf(buf, sizeof buf, "%%%02X", ch);
        out += buf;
      }
    }
  };
  put(cell);
  out += "__";
  put(service);
  out += ".json";
  return out;
}

}  // namespace urbanpulse
