#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evaluation.hpp"
#include "models/model.hpp"

namespace fdx {

// Knobs shared across pipeline stages. Loaded from a JSON config file;
// individual command-line flags override single fields.
struct RunConfig {
  std::uint64_t seed = 42;
  int threads = 0;  // 0 = hardware default
  std::size_t window = 144;
  std::size_t stride = 1;
  int fill_limit = 18;
  double alpha = 0.001;
  std::size_t trend_window = 144;
  std::size_t min_history = 10;
  double wind_lo = 5.0;
  double wind_hi = 11.0;
  double operating_min_wind = 3.0;
  int calibration_days = 14;
  MetricConfig metrics;
  std::vector<ClassifierConfig> classifiers;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

// The stock configuration: all four classifiers with their standard settings.
RunConfig default_run_config();

// Strict load: unknown keys, malformed JSON, or a missing file are
// validation errors.
RunConfig load_run_config(const std::string& path);

// FDX_SEED environment override; empty when unset, error when non-numeric.
std::optional<std::uint64_t> seed_from_env();

// Installs `seed` as the master seed: metric folds follow it, and every
// classifier whose own seed is 0 inherits it.
void apply_seed(RunConfig& cfg, std::uint64_t seed);

// Stage entry points behind the command-line front end. Errors are
// rethrown with a `<stage>: ` prefix.
void run_simulate(const std::string& scenario_path,
                  std::optional<std::uint64_t> seed_override, const std::string& out_dir);

void run_detect(const RunConfig& cfg, const std::string& raw_dir,
                const std::string& scores_out, const std::string& calibration_out);

// split_path may be empty; when given, the detector column reduction is
// fitted on the split's training units only.
void run_preprocess(const RunConfig& cfg, const std::string& scores_path,
                    const std::string& frames_path, const std::string& split_path,
                    const std::string& base_out);

void run_featurize(const RunConfig& cfg, const std::string& base_path,
                   const std::string& features_out);

void run_train(const RunConfig& cfg, const std::string& features_path,
               const std::string& model_name, const std::string& model_out);

// Exactly one input form: a feature CSV, or anomaly scores + fault frames
// (which keeps every detector column candidate for per-fold re-selection).
void run_cv(const RunConfig& cfg, const std::string& features_path,
            const std::string& scores_path, const std::string& frames_path,
            const std::string& report_json_out, const std::string& report_md_out);

// Exactly one input form: train/test feature CSVs, or anomaly scores +
// frames + a train/test split of units.
void run_evaluate(const RunConfig& cfg, const std::string& train_path,
                  const std::string& test_path, const std::string& scores_path,
                  const std::string& frames_path, const std::string& split_path,
                  const std::string& model_name, const std::string& report_json_out,
                  const std::string& report_md_out);

void run_report(const std::string& report_json_path, const std::string& markdown_out);

// simulate -> (detect) -> transfer evaluation, writing every artifact
// into out_dir.
void run_end_to_end(const RunConfig& cfg, const std::string& scenario_path,
                    std::optional<std::uint64_t> seed_override, const std::string& out_dir);

// Shared helpers, exposed for tests.
CandidateTable candidate_table_from_scores(const RunConfig& cfg,
                                           std::vector<AnomalyRecord> records,
                                           const std::vector<FaultFrame>& frames);
CandidateTable candidate_table_from_features(const FeatureTable& table);
std::vector<AnomalyRecord> filter_units(std::vector<AnomalyRecord> records,
                                        const std::vector<UnitId>& units);

}  // namespace fdx
