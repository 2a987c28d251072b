#include <cmath>

#include "../common.hpp"
#include "internal.hpp"

namespace fdx {

namespace {

// Rule baseline: a detector score above 1.0 claims its fault class; when
// both detectors fire, the larger score wins and an exact tie goes to the
// bearing fault.
class AboveOneModel final : public Model {
 public:
  explicit AboveOneModel(ClassifierConfig config) : Model(std::move(config)) {}

  int predict_row(const std::array<double, kFeatureCount>& x) const override {
    const double bbcv = x[0];
    const double tuplet = x[1];
    if (!std::isfinite(bbcv) || !std::isfinite(tuplet)) {
      throw ValidationError("above_one: non-finite detector score");
    }
    const bool bearing = bbcv > 1.0;
    const bool sensor = tuplet > 1.0;
    if (bearing && sensor) {
      return fault_class_code(bbcv >= tuplet ? FaultClass::Bearing : FaultClass::Sensor);
    }
    if (bearing) return fault_class_code(FaultClass::Bearing);
    if (sensor) return fault_class_code(FaultClass::Sensor);
    return fault_class_code(FaultClass::Normal);
  }

  std::array<double, kNumClasses> predict_scores(
      const std::array<double, kFeatureCount>& x) const override {
    std::array<double, kNumClasses> scores{};
    scores[static_cast<std::size_t>(predict_row(x))] = 1.0;
    return scores;
  }

  nlohmann::json params_json() const override { return nlohmann::json::object(); }
};

}  // namespace

namespace detail {

std::unique_ptr<Model> train_above_one(const ClassifierConfig& config, const TrainData& data) {
  // No fitted parameters; training only validates the rows it was given.
  if (!data.x.empty()) check_train_data(data, /*require_all_classes=*/false);
  return std::make_unique<AboveOneModel>(config);
}

std::unique_ptr<Model> above_one_from_params(const ClassifierConfig& config,
                                             const nlohmann::json&) {
  return std::make_unique<AboveOneModel>(config);
}

}  // namespace detail

}  // namespace fdx
