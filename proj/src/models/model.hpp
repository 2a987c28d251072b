#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "domain.hpp"
#include "features.hpp"

namespace fdx {

enum class ModelKind { AboveOne, RandomForest, Gbm, Mlp };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct RandomForestConfig {
  int trees = 100;
  int max_depth = 0;  // 0 = unlimited
  int min_samples_split = 2;
  int max_features = 2;  // split candidates per node
};

struct GbmConfig {
  int rounds = 100;
  double learning_rate = 0.1;
  int max_leaves = 31;
  int min_samples_leaf = 20;
  int max_bins = 64;
};

struct MlpConfig {
  std::vector<int> hidden_layers = {5};
  double learning_rate = 0.001;
  int epochs = 200;
  int batch_size = 64;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool scale_features = true;  // internal min-max on the continuous columns
};

struct ClassifierConfig {
  ModelKind kind = ModelKind::AboveOne;
  std::uint64_t seed = 0;
  std::array<double, kNumClasses> class_weights = {1.0, 1.0, 1.0};
  RandomForestConfig rf;
  GbmConfig gbm;
  MlpConfig mlp;

  std::string name() const { return model_kind_name(kind); }
  nlohmann::json to_json() const;
  static ClassifierConfig from_json(const nlohmann::json& j);
  void validate() const;
};

struct TrainData {
  std::vector<std::array<double, kFeatureCount>> x;
  std::vector<int> y;
};

TrainData to_train_data(std::span<const FeatureRow> rows);

class Model {
 public:
  virtual ~Model() = default;

  ModelKind kind() const { return config_.kind; }
  const ClassifierConfig& config() const { return config_; }

  virtual int predict_row(const std::array<double, kFeatureCount>& x) const = 0;
  // Per-class scores (vote shares, softmax, ...); argmax ties break toward
  // the lowest class code in predict_row.
  virtual std::array<double, kNumClasses> predict_scores(
      const std::array<double, kFeatureCount>& x) const = 0;
  virtual nlohmann::json params_json() const = 0;

  std::vector<int> predict(std::span<const std::array<double, kFeatureCount>> rows) const;

 protected:
  explicit Model(ClassifierConfig config) : config_(std::move(config)) {}
  ClassifierConfig config_;
};

// Deterministic in (config, data, seed). Learned kinds require every class
// present and reject non-finite features.
std::unique_ptr<Model> train_model(const ClassifierConfig& config, const TrainData& data);

// JSON with magic "fdx-model", format version 1, config echo, class-code
// mapping, feature-column order, and fitted parameters.
void save_model(const std::string& path, const Model& model);
std::unique_ptr<Model> load_model(const std::string& path);
std::string model_to_json(const Model& model);
std::unique_ptr<Model> model_from_json(const std::string& text);

// Shared by predict_row implementations: first index of the largest score.
int argmax_class(const std::array<double, kNumClasses>& scores);

}  // namespace fdx
