#pragma once

#include <span>
#include <vector>

#include "model.hpp"

namespace fdx {

struct MlpLayer {
  std::vector<std::vector<double>> w;  // w[out][in]
  std::vector<double> b;               // b[out]
};

// Feed-forward network 6 -> hidden (ReLU) -> 3 (softmax), trained with
// mini-batch Adam on weighted softmax cross-entropy. When configured, a
// min-max scaler fitted on the training rows is applied to the continuous
// feature columns before the first layer; loss_and_gradients operates on
// network inputs (post-scaler space).
class MlpModel final : public Model {
 public:
  MlpModel(ClassifierConfig config, std::vector<MlpLayer> layers, MinMaxScaler scaler,
           bool scaler_fitted);

  int predict_row(const std::array<double, kFeatureCount>& x) const override;
  std::array<double, kNumClasses> predict_scores(
      const std::array<double, kFeatureCount>& x) const override;
  nlohmann::json params_json() const override;

  const std::vector<MlpLayer>& layers() const { return layers_; }
  void set_layers(std::vector<MlpLayer> layers);

  struct BatchGradients {
    double loss = 0.0;
    std::vector<MlpLayer> grads;  // same shapes as the layers
  };
  // Weighted mean cross-entropy of the batch and its analytic gradients.
  BatchGradients loss_and_gradients(std::span<const std::array<double, kFeatureCount>> x,
                                    std::span<const int> y) const;

 private:
  std::array<double, kNumClasses> forward(const std::array<double, kFeatureCount>& raw) const;

  std::vector<MlpLayer> layers_;
  MinMaxScaler scaler_;
  bool scaler_fitted_ = false;
};

}  // namespace fdx
