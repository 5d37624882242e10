#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "urbanpulse/active_pairs.hpp"
#include "urbanpulse/activity.hpp"
#include "urbanpulse/adaptive.hpp"
#include "urbanpulse/deviation_model.hpp"
#include "urbanpulse/folds.hpp"
#include "urbanpulse/forecaster.hpp"
#include "urbanpulse/fusion.hpp"
#include "urbanpulse/ground_truth.hpp"
#include "urbanpulse/levels.hpp"
#include "urbanpulse/signature.hpp"

namespace urbanpulse {

enum class Method { kSignature, kAdaptive };
std::string_view method_name(Method m);
Method parse_method(std::string_view text);

struct AdaptiveParams {
  ForecasterParams forecaster;
  double half_life = 1440.0;
  double h = 3.0;
  double sigma_floor_abs = 0.5;
  double sigma_floor_rel = 1e-3;
  int warmup_days = 7;
};

struct EvaluationParams {
  int level = 1;
  int alarms_per_event = 1;
  double default_radius_m = kDefaultRadiusM;
  bool exclude_undetectable = false;
};

struct RunPaths {
  std::string activity = "activity.csv";
  std::string cells = "cells.csv";
  std::string dbue = "dbue.json";
  std::string out_dir = "out";
};

// Everything that determines a run. Serialized into every artifact.
struct RunConfig {
  Method method = Method::kSignature;
  std::vector<std::string> services;  // empty: every service in the data
  FoldSpec folds;
  double min_mean_rate = kDefaultMinMeanRate;
  SignatureParams signature;
  DeviationModelParams deviation;
  AdaptiveParams adaptive;
  CalibrationParams calibration;
  std::vector<std::string> holidays;  // YYYY-MM-DD
  Sensitivity sensitivity = Sensitivity::k4h;
  std::uint64_t seed = 1;
  EvaluationParams evaluation;
  RunPaths paths;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults. Throws ParseError/ValidationError.
  static RunConfig from_json(const nlohmann::json& doc);
  static RunConfig load(const std::filesystem::path& path);

  // Hex FNV-1a of the model-relevant part of the configuration: method,
  // services, folds, hyperparameters, holidays and seed. Paths, sensitivity
  // and evaluation settings are excluded so that stages sharing trained
  // models agree.
  std::string fingerprint() const;
};

struct SignaturePairModel {
  std::string cell;
  std::string service;
  WeeklySignature signature;
  DeviationModel deviation;
};

struct AdaptivePairModel {
  std::string cell;
  std::string service;
  ForecastModel forecast;
  ChartParams chart;
  double training_mean = 0.0;
  PositionedChart seed;    // chart seeded for the fold's test interval
  DeviationModel z_model;  // distribution of training z scores
};

struct SkippedPair {
  std::string cell;
  std::string service;
  std::string reason;
};

// Models of one fold.
struct TrainedModels {
  Method method = Method::kSignature;
  std::vector<std::string> cells;
  std::vector<std::string> services;
  MinuteRange test_range;
  std::vector<SignaturePairModel> signature;
  std::vector<AdaptivePairModel> adaptive;
  std::vector<SkippedPair> skipped;

  std::size_t size() const { return method == Method::kSignature ? signature.size() : adaptive.size(); }
};

// Resolves the service list of a run against the data.
std::vector<std::string> resolve_services(const RunConfig& config, const ActivityCube& data);

// Fits one model per active (cell, service) of `train` (full span, test
// minutes missing). Pairs failing a fit are skipped with the reason.
TrainedModels train_models(const ActivityCube& train, MinuteRange test_range, const RunConfig& config);

// Fused score per (cell, minute) over a cube's span; absent when no service
// contributed.
struct ScoreGrid {
  std::vector<std::string> cells;
  std::vector<std::string> services;
  MinuteRange span;
  std::vector<double> log_score;     // cells x minutes
  std::vector<ServiceMask> contrib;  // 0 = no score

  std::optional<LikelihoodScore> at(std::size_t cell, Minute t) const;
};

// Scores of the training minutes, used for calibration. For the adaptive
// method the chart starts from the first warm-up window of training data.
ScoreGrid training_scores(const TrainedModels& models, const ActivityCube& train,
                          const RunConfig& config);

// Scores of held-out data; the adaptive chart resumes from each pair's seed.
ScoreGrid detection_scores(const TrainedModels& models, const ActivityCube& test,
                           const RunConfig& config);

LevelThresholds calibrate_from_scores(const ScoreGrid& scores, const CalibrationParams& params);

// Alarms whose level is at least 1, sorted by (minute, cell).
std::vector<DetectedAnomaly> detect_alarms(const ScoreGrid& scores, const LevelThresholds& thresholds);

// Fold-level convenience: train, calibrate and detect.
struct FoldRun {
  MinuteRange test_range;
  TrainedModels models;
  LevelThresholds thresholds;
  std::vector<DetectedAnomaly> alarms;
};
FoldRun run_fold(const Fold& fold, const RunConfig& config);

// --- persistence -----------------------------------------------------------

inline constexpr int kArtifactVersion = 1;

nlohmann::json signature_model_to_json(const SignaturePairModel& m);
SignaturePairModel signature_model_from_json(const nlohmann::json& doc);
nlohmann::json adaptive_model_to_json(const AdaptivePairModel& m);
AdaptivePairModel adaptive_model_from_json(const nlohmann::json& doc);

nlohmann::json thresholds_to_json(const LevelThresholds& thresholds);
LevelThresholds thresholds_from_json(const nlohmann::json& doc);

// `minute,cell_id,level,score,services`.
void write_alarms_csv(std::ostream& out, const std::vector<DetectedAnomaly>& alarms,
                      const std::vector<std::string>& services);
std::vector<DetectedAnomaly> read_alarms_csv(std::istream& in, const std::vector<std::string>& services);

// Model-file name for a pair, safe on any filesystem.
std::string model_file_name(const std::string& cell, const std::string& service);

// Little-endian float64 arrays as base64 text.
std::string encode_doubles(const std::vector<double>& values);
std::vector<double> decode_doubles(const std::string& text);

}  // namespace urbanpulse
