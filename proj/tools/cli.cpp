#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "urbanpulse/activity_csv.hpp"
#include "urbanpulse/dbue.hpp"
#include "urbanpulse/error.hpp"
#include "urbanpulse/evaluation.hpp"
#include "urbanpulse/folds.hpp"
#include "urbanpulse/pipeline.hpp"
#include "urbanpulse/synth.hpp"

namespace urbanpulse::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Files and directories written by the current command, removed again when
// the command fails.
class Outputs {
 public:
  fs::path file(const fs::path& path) {
    make_dirs(path.parent_path());
    files_.push_back(path);
    return path;
  }

  void make_dirs(const fs::path& dir) {
    if (dir.empty() || fs::exists(dir)) return;
    make_dirs(dir.parent_path());
    fs::create_directory(dir);
    dirs_.push_back(dir);
  }

  void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(file(path), std::ios::binary);
    out << text;
    if (!out) throw Error("io_error", "cannot write " + path.string());
  }

  void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

  void rollback() noexcept {
    std::error_code ec;
    for (auto it = files_.rbegin(); it != files_.rend(); ++it) fs::remove(*it, ec);
    for (auto it = dirs_.rbegin(); it != dirs_.rend(); ++it) fs::remove(*it, ec);  // only if empty
    files_.clear();
    dirs_.clear();
  }

  std::vector<std::string> written() const {
    std::vector<std::string> out;
    for (const auto& f : files_) out.push_back(f.generic_string());
    return out;
  }

 private:
  std::vector<fs::path> files_;
  std::vector<fs::path> dirs_;
};

struct Options {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<std::string> services;
  std::optional<std::string> sensitivity;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> activity;
  std::optional<std::string> cells;
  std::optional<std::string> dbue;
  std::optional<int> fold;
  std::optional<int> level;
  std::string scenario;
  std::string input;
  bool force = false;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Relative paths in a config file are taken from the file's directory.
std::string anchored(const std::string& path, const fs::path& base) {
  if (path.empty() || fs::path(path).is_absolute() || base.empty()) return path;
  return (base / path).lexically_normal().generic_string();
}

RunConfig resolve_config(const Options& o) {
  RunConfig c;
  if (!o.config_path.empty()) {
    c = RunConfig::load(o.config_path);
    const fs::path base = fs::path(o.config_path).parent_path();
    c.paths.activity = anchored(c.paths.activity, base);
    c.paths.cells = anchored(c.paths.cells, base);
    c.paths.dbue = anchored(c.paths.dbue, base);
    c.paths.out_dir = anchored(c.paths.out_dir, base);
  }
  if (o.method) c.method = parse_method(*o.method);
  if (o.services) c.services = split_list(*o.services);
  if (o.sensitivity) c.sensitivity = parse_sensitivity(*o.sensitivity);
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.paths.out_dir = *o.out_dir;
  if (o.activity) c.paths.activity = *o.activity;
  if (o.cells) c.paths.cells = *o.cells;
  if (o.dbue) c.paths.dbue = *o.dbue;
  if (o.level) {
    if (*o.level < 1 || *o.level > 3) throw ValidationError("--level must be 1, 2 or 3");
    c.evaluation.level = *o.level;
  }
  return c;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

fs::path fold_dir(const RunConfig& c, std::size_t fold) {
  return fs::path(c.paths.out_dir) / ("fold" + std::to_string(fold));
}

// Paths are left out so artifacts do not depend on where they were written.
json stamp(const RunConfig& c) {
  json config = c.to_json();
  config.erase("paths");
  return {{"fingerprint", c.fingerprint()}, {"config", config}};
}

void check_fingerprint(const json& doc, const RunConfig& c, const fs::path& source, bool force) {
  const auto found = doc.value("fingerprint", std::string());
  if (force || found == c.fingerprint()) return;
  throw FingerprintMismatchError(source.string() + " was produced with configuration " + found +
                                 ", current configuration is " + c.fingerprint() + " (use --force to override)");
}

// Activity data and the folds it splits into.
struct Dataset {
  ActivityCube cube;
  std::vector<MinuteRange> ranges;
};

Dataset load_dataset(const RunConfig& c) {
  Dataset d;
  d.cube = load_activity_csv(c.paths.activity);
  d.ranges = fold_ranges(d.cube.span(), c.folds);
  return d;
}

std::vector<std::size_t> selected_folds(const Options& o, std::size_t count) {
  if (o.fold) {
    if (*o.fold < 0 || static_cast<std::size_t>(*o.fold) >= count) {
      throw SpecError("--fold " + std::to_string(*o.fold) + " is out of range (have " + std::to_string(count) +
                      " folds)");
    }
    return {static_cast<std::size_t>(*o.fold)};
  }
  std::vector<std::size_t> all(count);
  for (std::size_t i = 0; i < count; ++i) all[i] = i;
  return all;
}

Fold make_fold(const Dataset& d, std::size_t i) {
  return {d.ranges[i], d.cube.without(d.ranges[i]), d.cube.restricted(d.ranges[i])};
}

// --- models on disk ----------------------------------------------------------

void save_models(Outputs& outputs, const fs::path& dir, const TrainedModels& m, const RunConfig& c,
                 std::size_t fold) {
  json trained = json::array();
  auto save = [&](const std::string& cell, const std::string& service, const json& doc) {
    const auto name = model_file_name(cell, service);
    json full = doc;
    full["fingerprint"] = c.fingerprint();
    outputs.write_json(dir / "models" / name, full);
    trained.push_back({{"cell", cell}, {"service", service}, {"file", "models/" + name}});
  };
  for (const auto& p : m.signature) save(p.cell, p.service, signature_model_to_json(p));
  for (const auto& p : m.adaptive) save(p.cell, p.service, adaptive_model_to_json(p));
  json skipped = json::array();
  for (const auto& s : m.skipped) skipped.push_back({{"cell", s.cell}, {"service", s.service}, {"reason", s.reason}});
  json manifest = stamp(c);
  manifest["version"] = kArtifactVersion;
  manifest["fold"] = fold;
  manifest["method"] = method_name(m.method);
  manifest["test_range"] = {{"begin", format_minute(m.test_range.begin)}, {"end", format_minute(m.test_range.end)}};
  manifest["cells"] = m.cells;
  manifest["services"] = m.services;
  manifest["trained"] = trained;
  manifest["skipped"] = skipped;
  outputs.write_json(dir / "manifest.json", manifest);
}

struct LoadedModels {
  TrainedModels models;
  std::set<std::pair<std::string, std::string>> known;  // trained or skipped
};

LoadedModels load_models(const fs::path& dir, const RunConfig& c, bool force) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw NotFoundError("no trained models in " + dir.string());
  const json manifest = read_json(manifest_path);
  check_fingerprint(manifest, c, manifest_path, force);
  LoadedModels out;
  auto& m = out.models;
  try {
    m.method = parse_method(manifest.at("method").get<std::string>());
    m.cells = manifest.at("cells").get<std::vector<std::string>>();
    m.services = manifest.at("services").get<std::vector<std::string>>();
    m.test_range = {parse_minute(manifest.at("test_range").at("begin").get<std::string>()),
                    parse_minute(manifest.at("test_range").at("end").get<std::string>())};
    for (const auto& s : manifest.at("skipped")) {
      m.skipped.push_back({s.at("cell").get<std::string>(), s.at("service").get<std::string>(),
                           s.at("reason").get<std::string>()});
      out.known.emplace(m.skipped.back().cell, m.skipped.back().service);
    }
    for (const auto& t : manifest.at("trained")) {
      const auto cell = t.at("cell").get<std::string>();
      const auto service = t.at("service").get<std::string>();
      const fs::path file = dir / t.at("file").get<std::string>();
      if (!fs::exists(file)) {
        throw NotFoundError("model not found for (cell " + cell + ", service " + service + ")");
      }
      const json doc = read_json(file);
      check_fingerprint(doc, c, file, force);
      if (m.method == Method::kSignature) {
        m.signature.push_back(signature_model_from_json(doc));
      } else {
        m.adaptive.push_back(adaptive_model_from_json(doc));
      }
      out.known.emplace(cell, service);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  return out;
}

// Every (cell, service) of the scored data needs a model or a recorded skip.
void require_models(const LoadedModels& loaded, const ActivityCube& data) {
  for (const auto& cell : data.cells()) {
    for (const auto& service : loaded.models.services) {
      if (!data.find_service(service)) continue;
      if (!loaded.known.count({cell, service})) {
        throw NotFoundError("model not found for (cell " + cell + ", service " + service + ")");
      }
    }
  }
}

void require_any_model(const fs::path& dir, const ActivityCube& data, const RunConfig& c) {
  if (fs::exists(dir / "manifest.json")) return;
  const auto services = resolve_services(c, data);
  if (data.cells().empty() || services.empty()) throw NotFoundError("no trained models in " + dir.string());
  throw NotFoundError("model not found for (cell " + data.cells().front() + ", service " + services.front() +
                      ")");
}

LevelThresholds load_thresholds(const fs::path& dir, const RunConfig& c, bool force) {
  const fs::path path = dir / "thresholds.json";
  if (!fs::exists(path)) throw NotFoundError("thresholds not found: " + path.string() + " (run calibrate first)");
  const json doc = read_json(path);
  check_fingerprint(doc, c, path, force);
  try {
    return thresholds_from_json(doc);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

struct FoldAlarms {
  MinuteRange test_range;
  std::vector<std::string> services;
  std::vector<DetectedAnomaly> alarms;
  LevelThresholds thresholds;
};

FoldAlarms load_fold_alarms(const fs::path& dir, const RunConfig& c, bool force) {
  const fs::path csv = dir / "alarms.csv";
  const fs::path meta_path = dir / "alarms.csv.meta.json";
  if (!fs::exists(csv) || !fs::exists(meta_path)) {
    throw NotFoundError("alarms not found in " + dir.string() + " (run detect first)");
  }
  const json meta = read_json(meta_path);
  check_fingerprint(meta, c, meta_path, force);
  FoldAlarms out;
  out.test_range = {parse_minute(meta.at("test_range").at("begin").get<std::string>()),
                    parse_minute(meta.at("test_range").at("end").get<std::string>())};
  out.services = meta.at("services").get<std::vector<std::string>>();
  std::ifstream in(csv);
  out.alarms = read_alarms_csv(in, out.services);
  out.thresholds = load_thresholds(dir, c, force);
  return out;
}

// --- subcommands -------------------------------------------------------------

json cmd_synth(const Options& o, const RunConfig& c, Outputs& outputs) {
  if (o.scenario.empty()) throw SpecError("synth needs --scenario <path>");
  Scenario scenario = load_scenario(o.scenario);
  if (o.seed) scenario.seed = *o.seed;
  const ScenarioOutput gen = generate_scenario(scenario);
  const fs::path dir = c.paths.out_dir;
  {
    std::ostringstream csv;
    write_activity_csv(csv, gen.activity);
    outputs.write_text(dir / "activity.csv", csv.str());
  }
  {
    std::ostringstream csv;
    write_cell_registry(csv, gen.cells);
    outputs.write_text(dir / "cells.csv", csv.str());
  }
  outputs.write_json(dir / "dbue.json", dbue_to_json(gen.events));
  json meta = stamp(c);
  meta.update({{"seed", scenario.seed},
               {"scenario", read_json(o.scenario)},
               {"cells", gen.cells.size()},
               {"events", gen.events.size()},
               {"span", {{"begin", format_minute(gen.activity.span().begin)},
                         {"end", format_minute(gen.activity.span().end)}}},
               {"warnings", gen.warnings}});
  outputs.write_json(dir / "synth.meta.json", meta);
  return {{"events", gen.events.size()}, {"warnings", gen.warnings}};
}

json cmd_train(const Options& o, const RunConfig& c, Outputs& outputs) {
  const Dataset d = load_dataset(c);
  json folds = json::array();
  for (const auto i : selected_folds(o, d.ranges.size())) {
    const Fold fold = make_fold(d, i);
    const TrainedModels m = train_models(fold.train, fold.test_range, c);
    save_models(outputs, fold_dir(c, i), m, c, i);
    folds.push_back({{"fold", i}, {"trained", m.size()}, {"skipped", m.skipped.size()}});
  }
  return {{"folds", folds}};
}

json cmd_calibrate(const Options& o, const RunConfig& c, Outputs& outputs) {
  const Dataset d = load_dataset(c);
  json folds = json::array();
  for (const auto i : selected_folds(o, d.ranges.size())) {
    const fs::path dir = fold_dir(c, i);
    const Fold fold = make_fold(d, i);
    require_any_model(dir, fold.train, c);
    const LoadedModels loaded = load_models(dir, c, o.force);
    require_models(loaded, fold.train);
    const LevelThresholds th =
        calibrate_from_scores(training_scores(loaded.models, fold.train, c), c.calibration);
    json doc = thresholds_to_json(th);
    doc.update(stamp(c));
    doc["fold"] = i;
    outputs.write_json(dir / "thresholds.json", doc);
    std::size_t calibrated = 0;
    for (const auto& [cell, t] : th.antennas) calibrated += t.calibrated ? 1 : 0;
    folds.push_back({{"fold", i}, {"antennas", th.antennas.size()}, {"calibrated", calibrated}});
  }
  return {{"folds", folds}};
}

json cmd_detect(const Options& o, const RunConfig& c, Outputs& outputs) {
  const Dataset d = load_dataset(c);
  std::optional<ActivityCube> input;
  if (!o.input.empty()) input = load_activity_csv(o.input);
  json folds = json::array();
  for (const auto i : selected_folds(o, d.ranges.size())) {
    const fs::path dir = fold_dir(c, i);
    const MinuteRange range = d.ranges[i];
    ActivityCube test;
    if (input) {
      const MinuteRange s = input->span();
      const MinuteRange clipped{std::max(s.begin, range.begin), std::min(s.end, range.end)};
      if (clipped.empty()) throw SpecError("--input does not overlap the test interval of fold " + std::to_string(i));
      test = input->restricted(clipped);
    } else {
      test = d.cube.restricted(range);
    }
    require_any_model(dir, test, c);
    const LoadedModels loaded = load_models(dir, c, o.force);
    require_models(loaded, test);
    const LevelThresholds th = load_thresholds(dir, c, o.force);
    const auto alarms = detect_alarms(detection_scores(loaded.models, test, c), th);
    std::ostringstream csv;
    write_alarms_csv(csv, alarms, loaded.models.services);
    outputs.write_text(dir / "alarms.csv", csv.str());
    json meta = stamp(c);
    meta["fold"] = i;
    meta["test_range"] = {{"begin", format_minute(range.begin)}, {"end", format_minute(range.end)}};
    meta["services"] = loaded.models.services;
    meta["alarms"] = alarms.size();
    meta["columns"] = {"minute", "cell_id", "level", "score", "services"};
    outputs.write_json(dir / "alarms.csv.meta.json", meta);
    folds.push_back({{"fold", i}, {"alarms", alarms.size()}});
  }
  return {{"folds", folds}};
}

// Alarms of the selected folds together with the grid they were judged on.
struct EvaluationInputs {
  EvaluationGrid grid;
  std::vector<FoldAlarms> folds;
  GroundTruthMask mask;
  std::vector<std::string> warnings;
  std::vector<RejectedRecord> rejected;
};

EvaluationInputs evaluation_inputs(const Options& o, const RunConfig& c) {
  const Dataset d = load_dataset(c);
  EvaluationInputs in;
  in.grid.cells = d.cube.cells();
  for (const auto i : selected_folds(o, d.ranges.size())) {
    in.folds.push_back(load_fold_alarms(fold_dir(c, i), c, o.force));
    if (in.folds.back().test_range != d.ranges[i]) {
      throw SpecError("alarms of fold " + std::to_string(i) + " cover a different test interval");
    }
    in.grid.ranges.push_back(d.ranges[i]);
  }
  const CellRegistry registry = load_cell_registry(c.paths.cells);
  auto dbue = load_dbue(c.paths.dbue);
  in.rejected = std::move(dbue.rejected);
  in.mask = expand_ground_truth(dbue.events, registry, in.grid.cells, {c.evaluation.default_radius_m}, &in.warnings);
  return in;
}

EvaluationReport evaluate_at(const EvaluationInputs& in, const RunConfig& c, Sensitivity s) {
  std::vector<DetectedAnomaly> selected;
  for (const auto& f : in.folds) {
    auto part = select_at_sensitivity(f.alarms, f.thresholds, s);
    selected.insert(selected.end(), part.begin(), part.end());
  }
  ScoreOptions options;
  options.alarms_per_event = c.evaluation.alarms_per_event;
  options.exclude_undetectable = c.evaluation.exclude_undetectable;
  options.noskill_rate = sensitivity_frequency(s);
  return score_run(selected, in.mask, in.grid, 1, options);
}

json rejected_json(const std::vector<RejectedRecord>& rejected) {
  json out = json::array();
  for (const auto& r : rejected) out.push_back({{"index", r.index}, {"id", r.id}, {"reason", r.reason}});
  return out;
}

Sensitivity evaluation_sensitivity(const Options& o, const RunConfig& c) {
  if (o.level && !o.sensitivity) return level_sensitivity(c.evaluation.level);
  return c.sensitivity;
}

json cmd_evaluate(const Options& o, const RunConfig& c, Outputs& outputs) {
  const EvaluationInputs in = evaluation_inputs(o, c);
  const Sensitivity s = evaluation_sensitivity(o, c);
  const EvaluationReport report = evaluate_at(in, c, s);
  json doc = stamp(c);
  doc["sensitivity"] = sensitivity_name(s);
  doc["report"] = report_to_json(report);
  doc["warnings"] = in.warnings;
  doc["rejected_events"] = rejected_json(in.rejected);
  doc["forced"] = o.force;
  outputs.write_json(fs::path(c.paths.out_dir) / "report.json", doc);
  return {{"precision", report.precision ? json(*report.precision) : json(nullptr)},
          {"recall_minute", report.recall_minute ? json(*report.recall_minute) : json(nullptr)},
          {"recall_event", report.recall_event ? json(*report.recall_event) : json(nullptr)}};
}

json cmd_pr_curve(const Options& o, const RunConfig& c, Outputs& outputs) {
  const EvaluationInputs in = evaluation_inputs(o, c);
  std::map<Sensitivity, EvaluationReport> runs;
  for (const auto s : kAllSensitivities) runs.emplace(s, evaluate_at(in, c, s));
  const auto points = pr_curve(runs);
  std::ostringstream csv;
  write_pr_csv(csv, points);
  const fs::path path = fs::path(c.paths.out_dir) / "pr_curve.csv";
  outputs.write_text(path, csv.str());
  json meta = stamp(c);
  meta["forced"] = o.force;
  outputs.write_json(path.string() + ".meta.json", meta);
  return {{"points", points.size()}};
}

json cmd_export_map(const Options& o, const RunConfig& c, Outputs& outputs) {
  const Dataset d = load_dataset(c);
  const CellRegistry registry = load_cell_registry(c.paths.cells);
  const Sensitivity s = evaluation_sensitivity(o, c);
  std::vector<DetectedAnomaly> all;
  std::vector<std::string> services;
  for (const auto i : selected_folds(o, d.ranges.size())) {
    const FoldAlarms f = load_fold_alarms(fold_dir(c, i), c, o.force);
    if (!services.empty() && services != f.services) throw SpecError("folds disagree on the service list");
    services = f.services;
    auto part = select_at_sensitivity(f.alarms, f.thresholds, s);
    all.insert(all.end(), part.begin(), part.end());
  }
  json doc = alarm_map_geojson(all, registry, services);
  doc["properties"] = stamp(c);
  doc["properties"]["sensitivity"] = sensitivity_name(s);
  outputs.write_json(fs::path(c.paths.out_dir) / "alarms.geojson", doc);
  return {{"features", doc["features"].size()}};
}

json cmd_run(const Options& o, const RunConfig& c, Outputs& outputs) {
  json out;
  out["train"] = cmd_train(o, c, outputs);
  out["calibrate"] = cmd_calibrate(o, c, outputs);
  out["detect"] = cmd_detect(o, c, outputs);
  if (fs::exists(c.paths.dbue) && fs::exists(c.paths.cells)) {
    out["evaluate"] = cmd_evaluate(o, c, outputs);
    out["pr_curve"] = cmd_pr_curve(o, c, outputs);
  }
  return out;
}

void print_error(std::ostream& err, const std::string& command, const std::string& kind,
                 const std::string& message) {
  err << json{{"error", {{"command", command}, {"kind", kind}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anomaly detection in per-antenna mobile network activity"};
  app.require_subcommand(1);
  Options o;
  auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "run configuration (JSON)");
    sub->add_option("--method", o.method, "signature|adaptive");
    sub->add_option("--services", o.services, "comma-separated service subset");
    sub->add_option("--sensitivity", o.sensitivity, "4h|8h|12h|1d|2d|1w");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out-dir", o.out_dir, "artifact directory");
    sub->add_option("--activity", o.activity, "activity CSV");
    sub->add_option("--cells", o.cells, "cell registry CSV");
    sub->add_option("--dbue", o.dbue, "uncommon-event database JSON");
    sub->add_option("--fold", o.fold, "restrict to one fold (0-based)");
    sub->add_flag("--force", o.force, "accept artifacts with a different configuration fingerprint");
  };
  struct Sub {
    const char* name;
    const char* help;
    json (*fn)(const Options&, const RunConfig&, Outputs&);
  };
  const std::vector<Sub> subs = {
      {"synth", "generate a synthetic scenario (activity CSV, cells, DBUE)", cmd_synth},
      {"train", "fit per-(cell, service) models for each fold", cmd_train},
      {"calibrate", "compute level thresholds from training scores", cmd_calibrate},
      {"detect", "score held-out data and write alarms", cmd_detect},
      {"evaluate", "judge alarms against the DBUE", cmd_evaluate},
      {"pr-curve", "evaluate all six sensitivities", cmd_pr_curve},
      {"export-map", "write alarms as GeoJSON", cmd_export_map},
      {"run", "train, calibrate, detect, evaluate and pr-curve", cmd_run},
  };
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    common(sub);
    if (std::string(s.name) == "synth") sub->add_option("--scenario", o.scenario, "scenario JSON")->required();
    if (std::string(s.name) == "detect") sub->add_option("--input", o.input, "activity CSV to score instead of --activity");
    if (std::string(s.name) == "evaluate" || std::string(s.name) == "export-map") {
      sub->add_option("--level", o.level, "evaluate at level 1..3 instead of --sensitivity");
    }
  }

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();
  std::string command = "urbanpulse";
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, command, "usage", e.what());
    return 2;
  }

  const Sub* chosen = nullptr;
  for (const auto& s : subs) {
    if (app.got_subcommand(s.name)) chosen = &s;
  }
  command = chosen->name;
  Outputs outputs;
  try {
    const RunConfig config = resolve_config(o);
    json result = chosen->fn(o, config, outputs);
    json summary = {{"command", command}, {"status", "ok"}, {"fingerprint", config.fingerprint()},
                    {"result", result}};
    if (command != "train" && command != "run") summary["outputs"] = outputs.written();
    out << summary.dump() << "\n";
    return 0;
  } catch (const Error& e) {
    outputs.rollback();
    print_error(err, command, e.kind(), e.what());
  } catch (const nlohmann::json::exception& e) {
    outputs.rollback();
    print_error(err, command, "parse_error", e.what());
  } catch (const std::exception& e) {
    outputs.rollback();
    print_error(err, command, "internal_error", e.what());
  }
  return 1;
}

}  // namespace urbanpulse::cli
