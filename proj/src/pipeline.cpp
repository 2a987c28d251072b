#include "pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <utility>

#include "common.hpp"
#include "detectors.hpp"
#include "fsio.hpp"
#include "parallel.hpp"
#include "preprocess.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "timegrid.hpp"

namespace fdx {

namespace {

using nlohmann::json;

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string(name) + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(std::string(name) + ": " + e.what());
  }
}

const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "seed",        "threads",      "window",        "stride",
      "fill_limit",  "alpha",        "trend_window",  "min_history",
      "wind_lo",     "wind_hi",      "operating_min_wind", "calibration_days",
      "beta",        "k_folds",      "averaging",     "fold_mode",
      "group_by_unit", "classifiers",
  };
  return keys;
}

}  // namespace

void RunConfig::validate() const {
  if (threads < 0) throw ValidationError("threads must be >= 0");
  if (window < 4) throw ValidationError("window must be at least 4");
  if (stride < 1) throw ValidationError("stride must be at least 1");
  if (fill_limit < 0) throw ValidationError("fill_limit must be >= 0");
  if (!(alpha > 0.0 && alpha < 0.5)) throw ValidationError("alpha must lie in (0, 0.5)");
  if (trend_window < 4) throw ValidationError("trend_window must be at least 4");
  if (min_history < 4) throw ValidationError("min_history must be at least 4");
  if (!(wind_lo < wind_hi)) throw ValidationError("wind band must satisfy wind_lo < wind_hi");
  if (!(operating_min_wind >= 0.0)) {
    throw ValidationError("operating_min_wind must be non-negative");
  }
  if (calibration_days < 1) throw ValidationError("calibration_days must be at least 1");
  metrics.validate();
  for (const auto& c : classifiers) c.validate();
}

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["threads"] = threads;
  j["window"] = window;
  j["stride"] = stride;
  j["fill_limit"] = fill_limit;
  j["alpha"] = alpha;
  j["trend_window"] = trend_window;
  j["min_history"] = min_history;
  j["wind_lo"] = wind_lo;
  j["wind_hi"] = wind_hi;
  j["operating_min_wind"] = operating_min_wind;
  j["calibration_days"] = calibration_days;
  j["beta"] = metrics.beta;
  j["k_folds"] = metrics.k_folds;
  j["averaging"] = averaging_name(metrics.averaging);
  j["fold_mode"] = fold_mode_name(metrics.fold_mode);
  j["group_by_unit"] = metrics.group_by_unit;
  json cs = json::array();
  for (const auto& c : classifiers) cs.push_back(c.to_json());
  j["classifiers"] = std::move(cs);
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known_config_keys().count(key)) {
      throw ValidationError("unknown config key '" + key + "'");
    }
  }
  RunConfig cfg;
  try {
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("window")) cfg.window = j.at("window").get<std::size_t>();
    if (j.contains("stride")) cfg.stride = j.at("stride").get<std::size_t>();
    if (j.contains("fill_limit")) cfg.fill_limit = j.at("fill_limit").get<int>();
    if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
    if (j.contains("trend_window")) cfg.trend_window = j.at("trend_window").get<std::size_t>();
    if (j.contains("min_history")) cfg.min_history = j.at("min_history").get<std::size_t>();
    if (j.contains("wind_lo")) cfg.wind_lo = j.at("wind_lo").get<double>();
    if (j.contains("wind_hi")) cfg.wind_hi = j.at("wind_hi").get<double>();
    if (j.contains("operating_min_wind")) {
      cfg.operating_min_wind = j.at("operating_min_wind").get<double>();
    }
    if (j.contains("calibration_days")) {
      cfg.calibration_days = j.at("calibration_days").get<int>();
    }
    if (j.contains("beta")) cfg.metrics.beta = j.at("beta").get<double>();
    if (j.contains("k_folds")) cfg.metrics.k_folds = j.at("k_folds").get<int>();
    if (j.contains("averaging")) {
      cfg.metrics.averaging = averaging_from_name(j.at("averaging").get<std::string>());
    }
    if (j.contains("fold_mode")) {
      cfg.metrics.fold_mode = fold_mode_from_name(j.at("fold_mode").get<std::string>());
    }
    if (j.contains("group_by_unit")) {
      cfg.metrics.group_by_unit = j.at("group_by_unit").get<bool>();
    }
    if (j.contains("classifiers")) {
      const json& cs = j.at("classifiers");
      if (!cs.is_array()) throw ValidationError("classifiers must be an array");
      cfg.classifiers.clear();
      for (const json& c : cs) cfg.classifiers.push_back(ClassifierConfig::from_json(c));
    } else {
      cfg.classifiers = default_run_config().classifiers;
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid config value: ") + e.what());
  }
  apply_seed(cfg, cfg.seed);
  cfg.validate();
  return cfg;
}

RunConfig default_run_config() {
  RunConfig cfg;
  for (ModelKind kind : {ModelKind::AboveOne, ModelKind::RandomForest, ModelKind::Gbm,
                         ModelKind::Mlp}) {
    ClassifierConfig c;
    c.kind = kind;
    cfg.classifiers.push_back(c);
  }
  apply_seed(cfg, cfg.seed);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  const std::string text = read_text_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path + " is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

std::optional<std::uint64_t> seed_from_env() {
  const char* raw = std::getenv("FDX_SEED");
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  std::uint64_t value = 0;
  const char* end = raw;
  while (*end != '\0') ++end;
  auto res = std::from_chars(raw, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ValidationError("FDX_SEED must be a non-negative integer, got '" +
                          std::string(raw) + "'");
  }
  return value;
}

void apply_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.metrics.seed = seed;
  for (auto& c : cfg.classifiers) {
    if (c.seed == 0) c.seed = seed;
  }
}

namespace {

void ensure_parent_dir(const std::string& path) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

void write_simulation(const SimulationOutput& out, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_frames_json(out_dir + "/frames.json", out.frames);
  write_split_json(out_dir + "/split.json", out.split);
  if (out.fidelity == Fidelity::ScoreLevel) {
    write_anomaly_csv(out_dir + "/scores.csv", out.records);
  } else {
    const std::string raw = out_dir + "/raw";
    std::filesystem::create_directories(raw);
    write_raw_streams(raw, out.streams);
  }
}

double wind_speed_at(const WindSeries& wind, Timestamp ts) {
  auto it = std::lower_bound(wind.ts.begin(), wind.ts.end(), ts);
  if (it == wind.ts.end() || *it != ts) {
    throw ValidationError("no wind sample at timestamp " + std::to_string(ts));
  }
  return wind.speed[static_cast<std::size_t>(it - wind.ts.begin())];
}

struct DetectSlot {
  std::vector<AnomalyRecord> records;
  EntityId id;
  DetectorCalibration cal;
};

void detect_entity(const RunConfig& cfg, const RawStreams& streams,
                   const EntityStreams& e, DetectSlot& slot) {
  slot.id = e.id;
  auto wind_it = streams.wind.find(UnitId{e.id.park, e.id.unit});
  if (wind_it == streams.wind.end()) {
    throw ValidationError("entity " + e.id.str() + " has no wind signal");
  }
  const WindSeries& wind = wind_it->second;
  if (e.has_tuples()) {
    const TupleSeries& tuples = e.tuples;
    const std::size_t n = tuples.ts.size();
    if (n == 0) throw ValidationError("entity " + e.id.str() + " has an empty tuple series");
    std::vector<double> stats(n);
    std::vector<bool> operating(n);
    for (std::size_t i = 0; i < n; ++i) {
      stats[i] = tuplet_statistic(tuples.channels, i, i + 1);
      operating[i] = wind_speed_at(wind, tuples.ts[i]) >= cfg.operating_min_wind;
    }
    const Timestamp cal_end =
        tuples.ts.front() + static_cast<Timestamp>(cfg.calibration_days) * 86400;
    std::vector<double> healthy;
    for (std::size_t i = 0; i < n; ++i) {
      if (tuples.ts[i] < cal_end && operating[i]) healthy.push_back(stats[i]);
    }
    slot.cal = calibrate(std::move(healthy), cfg.alpha, DetectorKind::Tuplet);
    slot.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      AnomalyRecord r;
      r.ts = tuples.ts[i];
      r.id = e.id;
      r.detector = DetectorKind::Tuplet;
      r.score = stats[i] / slot.cal.reference_statistic;
      r.operating = operating[i];
      slot.records.push_back(std::move(r));
    }
  } else if (e.has_vibration()) {
    std::vector<VibrationSnapshot> captured =
        capture_condition_windows(streams, e.id, cfg.wind_lo, cfg.wind_hi);
    if (captured.empty()) {
      throw ValidationError("entity " + e.id.str() +
                            " has no vibration snapshots inside the wind band");
    }
    const auto& names = bbcv_feature_names();
    std::vector<FeatureHistory> histories(names.size());
    for (std::size_t f = 0; f < names.size(); ++f) {
      histories[f].feature = names[f];
      histories[f].ts.reserve(captured.size());
      histories[f].values.reserve(captured.size());
    }
    for (const auto& snap : captured) {
      BbcvFeatureSet fs = vibration_features(snap.samples);
      for (std::size_t f = 0; f < names.size(); ++f) {
        histories[f].ts.push_back(snap.ts);
        histories[f].values.push_back(fs.values[f]);
      }
    }
    slot.cal = make_calibration(DetectorKind::Bbcv, 1.0, cfg.alpha);
    slot.records =
        bbcv_scores(e.id, histories, slot.cal, cfg.trend_window, cfg.min_history);
  } else {
    throw ValidationError("entity " + e.id.str() + " carries no sensor data");
  }
}

}  // namespace

void run_simulate(const std::string& scenario_path,
                  std::optional<std::uint64_t> seed_override, const std::string& out_dir) {
  stage("simulate", [&] {
    ScenarioSpec spec = read_scenario(scenario_path);
    if (seed_override) spec.seed = *seed_override;
    SimulationOutput out = generate_fleet(spec);
    write_simulation(out, out_dir);
  });
}

void run_detect(const RunConfig& cfg, const std::string& raw_dir,
                const std::string& scores_out, const std::string& calibration_out) {
  stage("detect", [&] {
    cfg.validate();
    RawStreams streams = read_raw_streams(raw_dir);
    if (streams.entities.empty()) {
      throw ValidationError("raw directory holds no sensor streams");
    }
    std::vector<DetectSlot> slots(streams.entities.size());
    parallel_for(slots.size(), [&](std::size_t i) {
      detect_entity(cfg, streams, streams.entities[i], slots[i]);
    });
    std::vector<AnomalyRecord> records;
    std::vector<std::pair<EntityId, DetectorCalibration>> cals;
    for (auto& slot : slots) {
      cals.emplace_back(slot.id, slot.cal);
      records.insert(records.end(), std::make_move_iterator(slot.records.begin()),
                     std::make_move_iterator(slot.records.end()));
    }
    ensure_parent_dir(scores_out);
    write_anomaly_csv(scores_out, records);
    if (!calibration_out.empty()) {
      ensure_parent_dir(calibration_out);
      write_file_atomic(calibration_out, calibration_to_json(cals));
    }
  });
}

void run_preprocess(const RunConfig& cfg, const std::string& scores_path,
                    const std::string& frames_path, const std::string& split_path,
                    const std::string& base_out) {
  stage("preprocess", [&] {
    cfg.validate();
    std::vector<AnomalyRecord> records = read_anomaly_csv(scores_path);
    std::vector<FaultFrame> frames = read_frames_json(frames_path);
    const std::vector<UnitId>* fit_units = nullptr;
    DatasetSplit split;
    if (!split_path.empty()) {
      split = read_split_json(split_path);
      fit_units = &split.train_units;
    }
    PreprocessOutput out =
        preprocess_records(std::move(records), frames, fit_units, cfg.fill_limit);
    ensure_parent_dir(base_out);
    write_base_csv(base_out, out.base);
  });
}

void run_featurize(const RunConfig& cfg, const std::string& base_path,
                   const std::string& features_out) {
  stage("featurize", [&] {
    cfg.validate();
    BaseTable base = read_base_csv(base_path);
    FeatureTable features = build_feature_rows(base, cfg.window, cfg.stride);
    ensure_parent_dir(features_out);
    write_feature_csv(features_out, features);
  });
}

namespace {

ClassifierConfig config_for_model(const RunConfig& cfg, const std::string& name) {
  for (const auto& c : cfg.classifiers) {
    if (c.name() == name) return c;
  }
  ClassifierConfig c;
  c.kind = model_kind_from_name(name);
  c.seed = cfg.seed;
  return c;
}

}  // namespace

void run_train(const RunConfig& cfg, const std::string& features_path,
               const std::string& model_name, const std::string& model_out) {
  stage("train", [&] {
    cfg.validate();
    FeatureTable features = read_feature_csv(features_path);
    TrainData data = to_train_data(features.rows);
    ClassifierConfig config = config_for_model(cfg, model_name);
    std::unique_ptr<Model> model = train_model(config, data);
    ensure_parent_dir(model_out);
    save_model(model_out, *model);
  });
}

CandidateTable candidate_table_from_scores(const RunConfig& cfg,
                                           std::vector<AnomalyRecord> records,
                                           const std::vector<FaultFrame>& frames) {
  WideTable wide = group_records(filter_operating_mode(std::move(records)));
  assign_labels(wide, frames);
  fill_table(wide, cfg.fill_limit);
  return build_candidate_table(wide, cfg.window, cfg.stride);
}

CandidateTable candidate_table_from_features(const FeatureTable& table) {
  CandidateTable out;
  out.candidates = {"bbcv_base"};
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    CandidateTable::Row r;
    r.id = row.id;
    r.ts = row.ts;
    r.label = row.label;
    r.bbcv_base = {row.x[0]};
    r.tuplet_base = row.x[1];
    r.bbcv_tc = {row.x[2]};
    r.bbcv_var = {row.x[3]};
    r.tuplet_tc = row.x[4];
    r.tuplet_var = row.x[5];
    out.rows.push_back(std::move(r));
  }
  return out;
}

std::vector<AnomalyRecord> filter_units(std::vector<AnomalyRecord> records,
                                        const std::vector<UnitId>& units) {
  std::set<std::pair<std::string, std::string>> keep;
  for (const auto& u : units) keep.insert({u.park, u.unit});
  std::erase_if(records, [&](const AnomalyRecord& r) {
    return keep.count({r.id.park, r.id.unit}) == 0;
  });
  return records;
}

void run_cv(const RunConfig& cfg, const std::string& features_path,
            const std::string& scores_path, const std::string& frames_path,
            const std::string& report_json_out, const std::string& report_md_out) {
  stage("cv", [&] {
    cfg.validate();
    const bool from_features = !features_path.empty();
    const bool from_scores = !scores_path.empty() || !frames_path.empty();
    if (from_features == from_scores) {
      throw ValidationError(
          "provide either a feature table or anomaly scores plus fault frames");
    }
    CandidateTable table;
    if (from_features) {
      table = candidate_table_from_features(read_feature_csv(features_path));
    } else {
      if (scores_path.empty() || frames_path.empty()) {
        throw ValidationError("scores and frames must be given together");
      }
      table = candidate_table_from_scores(cfg, read_anomaly_csv(scores_path),
                                          read_frames_json(frames_path));
    }
    EvaluationReport report = cross_validate(cfg.metrics, table, cfg.classifiers);
    const std::string text = report_to_json(report);
    ensure_parent_dir(report_json_out);
    write_file_atomic(report_json_out, text);
    if (!report_md_out.empty()) {
      ensure_parent_dir(report_md_out);
      write_file_atomic(report_md_out, report_markdown_from_json(text));
    }
  });
}

void run_evaluate(const RunConfig& cfg, const std::string& train_path,
                  const std::string& test_path, const std::string& scores_path,
                  const std::string& frames_path, const std::string& split_path,
                  const std::string& model_name, const std::string& report_json_out,
                  const std::string& report_md_out) {
  stage("evaluate", [&] {
    cfg.validate();
    const bool from_files = !train_path.empty() || !test_path.empty();
    const bool from_scores =
        !scores_path.empty() || !frames_path.empty() || !split_path.empty();
    if (from_files == from_scores) {
      throw ValidationError(
          "provide either train/test feature tables or scores plus frames plus split");
    }
    CandidateTable train;
    CandidateTable test;
    if (from_files) {
      if (train_path.empty() || test_path.empty()) {
        throw ValidationError("train and test tables must be given together");
      }
      train = candidate_table_from_features(read_feature_csv(train_path));
      test = candidate_table_from_features(read_feature_csv(test_path));
    } else {
      if (scores_path.empty() || frames_path.empty() || split_path.empty()) {
        throw ValidationError("scores, frames and split must be given together");
      }
      std::vector<AnomalyRecord> records = read_anomaly_csv(scores_path);
      std::vector<FaultFrame> frames = read_frames_json(frames_path);
      DatasetSplit split = read_split_json(split_path);
      validate_split(split);
      if (split.train_units.empty() || split.test_units.empty()) {
        throw ValidationError("split must name both train and test units");
      }
      train = candidate_table_from_scores(cfg, filter_units(records, split.train_units),
                                          frames);
      test = candidate_table_from_scores(cfg, filter_units(records, split.test_units),
                                         frames);
    }
    std::vector<ClassifierConfig> configs;
    if (model_name.empty()) {
      configs = cfg.classifiers;
    } else {
      configs.push_back(config_for_model(cfg, model_name));
    }
    EvaluationReport report = transfer_evaluate(cfg.metrics, train, test, configs);
    const std::string text = report_to_json(report);
    ensure_parent_dir(report_json_out);
    write_file_atomic(report_json_out, text);
    if (!report_md_out.empty()) {
      ensure_parent_dir(report_md_out);
      write_file_atomic(report_md_out, report_markdown_from_json(text));
    }
  });
}

void run_report(const std::string& report_json_path, const std::string& markdown_out) {
  stage("report", [&] {
    const std::string text = read_text_file(report_json_path);
    const std::string md = report_markdown_from_json(text);
    ensure_parent_dir(markdown_out);
    write_file_atomic(markdown_out, md);
  });
}

void run_end_to_end(const RunConfig& cfg, const std::string& scenario_path,
                    std::optional<std::uint64_t> seed_override, const std::string& out_dir) {
  stage("run", [&] {
    cfg.validate();
    ScenarioSpec spec = read_scenario(scenario_path);
    if (seed_override) spec.seed = *seed_override;
    SimulationOutput out = generate_fleet(spec);
    write_simulation(out, out_dir);
    if (out.fidelity == Fidelity::SignalLevel) {
      run_detect(cfg, out_dir + "/raw", out_dir + "/scores.csv",
                 out_dir + "/calibration.json");
    }
    run_evaluate(cfg, "", "", out_dir + "/scores.csv", out_dir + "/frames.json",
                 out_dir + "/split.json", "", out_dir + "/report.json",
                 out_dir + "/report.md");
  });
}

}  // namespace fdx
