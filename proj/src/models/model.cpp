#include "model.hpp"

#include <cmath>

#include "../common.hpp"
#include "../fsio.hpp"
#include "internal.hpp"

namespace fdx {

using nlohmann::json;

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::AboveOne: return "above_one";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::Gbm: return "gbm";
    case ModelKind::Mlp: return "mlp";
  }
  return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "above_one") return ModelKind::AboveOne;
  if (name == "random_forest") return ModelKind::RandomForest;
  if (name == "gbm") return ModelKind::Gbm;
  if (name == "mlp") return ModelKind::Mlp;
  throw ValidationError("unknown model kind '" + name + "'");
}

void ClassifierConfig::validate() const {
  for (double w : class_weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw ValidationError("class weights must be positive and finite");
    }
  }
  switch (kind) {
    case ModelKind::AboveOne:
      break;
    case ModelKind::RandomForest:
      if (rf.trees < 1) throw ValidationError("random_forest: trees must be >= 1");
      if (rf.max_depth < 0) throw ValidationError("random_forest: max_depth must be >= 0");
      if (rf.min_samples_split < 2) {
        throw ValidationError("random_forest: min_samples_split must be >= 2");
      }
      if (rf.max_features < 1 || rf.max_features > static_cast<int>(kFeatureCount)) {
        throw ValidationError("random_forest: max_features must be in [1, 6]");
      }
      break;
    case ModelKind::Gbm:
      if (gbm.rounds < 0) throw ValidationError("gbm: rounds must be >= 0");
      if (!(gbm.learning_rate > 0.0)) throw ValidationError("gbm: learning_rate must be > 0");
      if (gbm.max_leaves < 2) throw ValidationError("gbm: max_leaves must be >= 2");
      if (gbm.min_samples_leaf < 1) throw ValidationError("gbm: min_samples_leaf must be >= 1");
      if (gbm.max_bins < 2 || gbm.max_bins > 255) {
        throw ValidationError("gbm: max_bins must be in [2, 255]");
      }
      break;
    case ModelKind::Mlp:
      if (mlp.hidden_layers.empty()) {
        throw ValidationError("mlp: at least one hidden layer required");
      }
      for (int h : mlp.hidden_layers) {
        if (h < 1) throw ValidationError("mlp: hidden layer sizes must be >= 1");
      }
      if (!(mlp.learning_rate > 0.0)) throw ValidationError("mlp: learning_rate must be > 0");
      if (mlp.epochs < 0) throw ValidationError("mlp: epochs must be >= 0");
      if (mlp.batch_size < 1) throw ValidationError("mlp: batch_size must be >= 1");
      if (!(mlp.beta1 > 0.0 && mlp.beta1 < 1.0) || !(mlp.beta2 > 0.0 && mlp.beta2 < 1.0)) {
        throw ValidationError("mlp: Adam betas must lie in (0, 1)");
      }
      if (!(mlp.eps > 0.0)) throw ValidationError("mlp: Adam eps must be > 0");
      break;
  }
}

json ClassifierConfig::to_json() const {
  json j{{"kind", name()}, {"seed", seed}};
  if (class_weights != std::array<double, kNumClasses>{1.0, 1.0, 1.0}) {
    j["class_weights"] = class_weights;
  }
  switch (kind) {
    case ModelKind::AboveOne:
      break;
    case ModelKind::RandomForest:
      j["trees"] = rf.trees;
      j["max_depth"] = rf.max_depth;
      j["min_samples_split"] = rf.min_samples_split;
      j["max_features"] = rf.max_features;
      break;
    case ModelKind::Gbm:
      j["rounds"] = gbm.rounds;
      j["learning_rate"] = gbm.learning_rate;
      j["max_leaves"] = gbm.max_leaves;
      j["min_samples_leaf"] = gbm.min_samples_leaf;
      j["max_bins"] = gbm.max_bins;
      break;
    case ModelKind::Mlp:
      j["hidden_layers"] = mlp.hidden_layers;
      j["activation"] = "relu";
      j["learning_rate"] = mlp.learning_rate;
      j["epochs"] = mlp.epochs;
      j["batch_size"] = mlp.batch_size;
      j["beta1"] = mlp.beta1;
      j["beta2"] = mlp.beta2;
      j["eps"] = mlp.eps;
      j["scale_features"] = mlp.scale_features;
      break;
  }
  return j;
}

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError("classifier config: bad value for '" + std::string(key) + "'");
  }
}

}  // namespace

ClassifierConfig ClassifierConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("classifier config must be an object");
  ClassifierConfig c;
  auto kind_it = j.find("kind");
  if (kind_it == j.end() || !kind_it->is_string()) {
    throw ValidationError("classifier config: missing 'kind'");
  }
  c.kind = model_kind_from_name(kind_it->get<std::string>());
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  if (auto it = j.find("class_weights"); it != j.end()) {
    auto w = it->get<std::vector<double>>();
    if (w.size() != kNumClasses) {
      throw ValidationError("classifier config: class_weights needs 3 entries");
    }
    std::copy(w.begin(), w.end(), c.class_weights.begin());
  }
  if (auto it = j.find("activation"); it != j.end() && it->get<std::string>() != "relu") {
    throw ValidationError("classifier config: only relu activation is supported");
  }
  c.rf.trees = get_or(j, "trees", c.rf.trees);
  c.rf.max_depth = get_or(j, "max_depth", c.rf.max_depth);
  c.rf.min_samples_split = get_or(j, "min_samples_split", c.rf.min_samples_split);
  c.rf.max_features = get_or(j, "max_features", c.rf.max_features);
  c.gbm.rounds = get_or(j, "rounds", c.gbm.rounds);
  c.gbm.max_leaves = get_or(j, "max_leaves", c.gbm.max_leaves);
  c.gbm.min_samples_leaf = get_or(j, "min_samples_leaf", c.gbm.min_samples_leaf);
  c.gbm.max_bins = get_or(j, "max_bins", c.gbm.max_bins);
  c.mlp.hidden_layers = get_or(j, "hidden_layers", c.mlp.hidden_layers);
  c.mlp.epochs = get_or(j, "epochs", c.mlp.epochs);
  c.mlp.batch_size = get_or(j, "batch_size", c.mlp.batch_size);
  c.mlp.beta1 = get_or(j, "beta1", c.mlp.beta1);
  c.mlp.beta2 = get_or(j, "beta2", c.mlp.beta2);
  c.mlp.eps = get_or(j, "eps", c.mlp.eps);
  c.mlp.scale_features = get_or(j, "scale_features", c.mlp.scale_features);
  if (auto it = j.find("learning_rate"); it != j.end()) {
    const double lr = it->get<double>();
    c.gbm.learning_rate = lr;
    c.mlp.learning_rate = lr;
  }
  c.validate();
  return c;
}

TrainData to_train_data(std::span<const FeatureRow> rows) {
  TrainData data;
  data.x.reserve(rows.size());
  data.y.reserve(rows.size());
  for (const FeatureRow& row : rows) {
    data.x.push_back(row.x);
    data.y.push_back(fault_class_code(row.label));
  }
  return data;
}

std::vector<int> Model::predict(std::span<const std::array<double, kFeatureCount>> rows) const {
  std::vector<int> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = predict_row(rows[i]);
  return out;
}

int argmax_class(const std::array<double, kNumClasses>& scores) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (scores[static_cast<std::size_t>(c)] > scores[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

namespace detail {

void check_train_data(const TrainData& data, bool require_all_classes) {
  if (data.x.size() != data.y.size()) {
    throw ValidationError("training data: feature/label count mismatch");
  }
  if (data.x.empty()) throw ValidationError("training data is empty");
  std::array<std::size_t, kNumClasses> counts{};
  for (std::size_t i = 0; i < data.x.size(); ++i) {
    for (double v : data.x[i]) {
      if (!std::isfinite(v)) throw ValidationError("training data contains non-finite features");
    }
    const int y = data.y[i];
    if (y < 0 || y >= kNumClasses) {
      throw ValidationError("training data contains an unknown class code");
    }
    ++counts[static_cast<std::size_t>(y)];
  }
  if (require_all_classes) {
    for (int c = 0; c < kNumClasses; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        throw ValidationError("training data is missing class " +
                              fault_class_name(fault_class_from_code(c)));
      }
    }
  }
}

}  // namespace detail

std::unique_ptr<Model> train_model(const ClassifierConfig& config, const TrainData& data) {
  config.validate();
  switch (config.kind) {
    case ModelKind::AboveOne: return detail::train_above_one(config, data);
    case ModelKind::RandomForest: return detail::train_random_forest(config, data);
    case ModelKind::Gbm: return detail::train_gbm(config, data);
    case ModelKind::Mlp: return detail::train_mlp(config, data);
  }
  throw ValidationError("unknown model kind");
}

namespace {
constexpr const char* kModelMagic = "fdx-model";
constexpr int kModelVersion = 1;
}  // namespace

std::string model_to_json(const Model& model) {
  json classes = json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    classes.push_back({{"code", c}, {"name", fault_class_name(fault_class_from_code(c))}});
  }
  json features = json::array();
  for (const char* name : kFeatureNames) features.push_back(name);
  json doc{{"magic", kModelMagic},
           {"version", kModelVersion},
           {"kind", model.config().name()},
           {"config", model.config().to_json()},
           {"classes", classes},
           {"features", features},
           {"params", model.params_json()}};
  return doc.dump(2) + "\n";
}

std::unique_ptr<Model> model_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model file: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("magic", std::string()) != kModelMagic) {
    throw IoError("model file: missing fdx-model magic");
  }
  const int version = doc.value("version", -1);
  if (version != kModelVersion) {
    throw IoError("model file: unsupported format version " + std::to_string(version) +
                  " (expected " + std::to_string(kModelVersion) + ")");
  }
  ClassifierConfig config;
  json params;
  try {
    config = ClassifierConfig::from_json(doc.at("config"));
    const auto features = doc.at("features").get<std::vector<std::string>>();
    if (features.size() != kFeatureCount) {
      throw IoError("model file: feature layout mismatch");
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      if (features[i] != kFeatureNames[i]) {
        throw IoError("model file: feature layout mismatch at column " + std::to_string(i));
      }
    }
    for (const auto& entry : doc.at("classes")) {
      const int code = entry.at("code").get<int>();
      if (entry.at("name").get<std::string>() !=
          fault_class_name(fault_class_from_code(code))) {
        throw IoError("model file: class-code mapping mismatch");
      }
    }
    if (doc.at("kind").get<std::string>() != config.name()) {
      throw IoError("model file: kind does not match config");
    }
    params = doc.at("params");
  } catch (const json::exception& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
  try {
    switch (config.kind) {
      case ModelKind::AboveOne: return detail::above_one_from_params(config, params);
      case ModelKind::RandomForest: return detail::random_forest_from_params(config, params);
      case ModelKind::Gbm: return detail::gbm_from_params(config, params);
      case ModelKind::Mlp: return detail::mlp_from_params(config, params);
    }
  } catch (const json::exception& e) {
    throw IoError(std::string("model file: bad parameters: ") + e.what());
  }
  throw IoError("model file: unknown kind");
}

void save_model(const std::string& path, const Model& model) {
  write_file_atomic(path, model_to_json(model));
}

std::unique_ptr<Model> load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

}  // namespace fdx
