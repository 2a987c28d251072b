#include "mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../common.hpp"
#include "../rng.hpp"
#include "internal.hpp"

namespace fdx {

using nlohmann::json;

namespace {

std::vector<std::size_t> layer_sizes(const MlpConfig& cfg) {
  std::vector<std::size_t> sizes{kFeatureCount};
  for (int h : cfg.hidden_layers) sizes.push_back(static_cast<std::size_t>(h));
  sizes.push_back(kNumClasses);
  return sizes;
}

void check_layer_shapes(const std::vector<MlpLayer>& layers, const MlpConfig& cfg) {
  const auto sizes = layer_sizes(cfg);
  if (layers.size() + 1 != sizes.size()) {
    throw ValidationError("mlp: layer count does not match configuration");
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    if (layers[l].w.size() != out || layers[l].b.size() != out) {
      throw ValidationError("mlp: layer " + std::to_string(l) + " has a bad output size");
    }
    for (const auto& row : layers[l].w) {
      if (row.size() != in) {
        throw ValidationError("mlp: layer " + std::to_string(l) + " has a bad input size");
      }
    }
  }
}

std::vector<double> softmax(const std::vector<double>& logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - peak);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<MlpLayer> zero_like(const std::vector<MlpLayer>& layers) {
  std::vector<MlpLayer> zeros(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    zeros[l].w.assign(layers[l].w.size(), std::vector<double>(layers[l].w[0].size(), 0.0));
    zeros[l].b.assign(layers[l].b.size(), 0.0);
  }
  return zeros;
}

}  // namespace

MlpModel::MlpModel(ClassifierConfig config, std::vector<MlpLayer> layers, MinMaxScaler scaler,
                   bool scaler_fitted)
    : Model(std::move(config)),
      layers_(std::move(layers)),
      scaler_(scaler),
      scaler_fitted_(scaler_fitted) {
  check_layer_shapes(layers_, config_.mlp);
}

void MlpModel::set_layers(std::vector<MlpLayer> layers) {
  check_layer_shapes(layers, config_.mlp);
  layers_ = std::move(layers);
}

std::array<double, kNumClasses> MlpModel::forward(
    const std::array<double, kFeatureCount>& raw) const {
  const std::array<double, kFeatureCount> scaled =
      scaler_fitted_ ? scaler_.transform(raw) : raw;
  std::vector<double> act(scaled.begin(), scaled.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const MlpLayer& layer = layers_[l];
    std::vector<double> next(layer.b.size());
    for (std::size_t o = 0; o < layer.b.size(); ++o) {
      double z = layer.b[o];
      for (std::size_t i = 0; i < act.size(); ++i) z += layer.w[o][i] * act[i];
      next[o] = l + 1 < layers_.size() ? std::max(0.0, z) : z;
    }
    act = std::move(next);
  }
  const std::vector<double> p = softmax(act);
  std::array<double, kNumClasses> out;
  std::copy(p.begin(), p.end(), out.begin());
  return out;
}

int MlpModel::predict_row(const std::array<double, kFeatureCount>& x) const {
  return argmax_class(forward(x));
}

std::array<double, kNumClasses> MlpModel::predict_scores(
    const std::array<double, kFeatureCount>& x) const {
  return forward(x);
}

MlpModel::BatchGradients MlpModel::loss_and_gradients(
    std::span<const std::array<double, kFeatureCount>> x, std::span<const int> y) const {
  if (x.empty() || x.size() != y.size()) {
    throw ValidationError("mlp: gradient batch must be non-empty and aligned");
  }
  BatchGradients out;
  out.grads = zero_like(layers_);

  double weight_sum = 0.0;
  for (int label : y) {
    if (label < 0 || label >= kNumClasses) throw ValidationError("mlp: bad class code in batch");
    weight_sum += config_.class_weights[static_cast<std::size_t>(label)];
  }

  for (std::size_t s = 0; s < x.size(); ++s) {
    const double wgt = config_.class_weights[static_cast<std::size_t>(y[s])] / weight_sum;

    // Forward pass, keeping every activation for the backward sweep.
    std::vector<std::vector<double>> acts;
    acts.emplace_back(x[s].begin(), x[s].end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const MlpLayer& layer = layers_[l];
      std::vector<double> next(layer.b.size());
      for (std::size_t o = 0; o < layer.b.size(); ++o) {
        double z = layer.b[o];
        for (std::size_t i = 0; i < acts.back().size(); ++i) z += layer.w[o][i] * acts.back()[i];
        next[o] = l + 1 < layers_.size() ? std::max(0.0, z) : z;
      }
      acts.push_back(std::move(next));
    }
    const std::vector<double> p = softmax(acts.back());
    out.loss -= wgt * std::log(std::max(p[static_cast<std::size_t>(y[s])], 1e-300));

    // delta = dL/dz of the current layer, starting at the softmax output.
    std::vector<double> delta(kNumClasses);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      delta[c] = wgt * (p[c] - (static_cast<int>(c) == y[s] ? 1.0 : 0.0));
    }
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const std::vector<double>& input = acts[l];
      MlpLayer& grad = out.grads[l];
      for (std::size_t o = 0; o < delta.size(); ++o) {
        grad.b[o] += delta[o];
        for (std::size_t i = 0; i < input.size(); ++i) grad.w[o][i] += delta[o] * input[i];
      }
      if (l == 0) break;
      std::vector<double> prev(input.size(), 0.0);
      for (std::size_t i = 0; i < input.size(); ++i) {
        if (input[i] <= 0.0) continue;  // ReLU gate of the producing layer
        double acc = 0.0;
        for (std::size_t o = 0; o < delta.size(); ++o) acc += layers_[l].w[o][i] * delta[o];
        prev[i] = acc;
      }
      delta = std::move(prev);
    }
  }
  return out;
}

json MlpModel::params_json() const {
  json layers = json::array();
  for (const MlpLayer& layer : layers_) {
    layers.push_back({{"w", layer.w}, {"b", layer.b}});
  }
  json scaler;
  if (scaler_fitted_) {
    scaler = json{{"active", scaler_.active}, {"lo", scaler_.lo}, {"hi", scaler_.hi}};
  }
  return json{{"layers", layers}, {"scaler", scaler}};
}

namespace detail {

std::unique_ptr<Model> train_mlp(const ClassifierConfig& config, const TrainData& data) {
  check_train_data(data, /*require_all_classes=*/true);

  MinMaxScaler scaler;
  const bool scale = config.mlp.scale_features;
  std::vector<std::array<double, kFeatureCount>> inputs = data.x;
  if (scale) {
    const auto columns = scaled_feature_columns();
    scaler = MinMaxScaler::fit(data.x, columns);
    for (auto& row : inputs) row = scaler.transform(row);
  }

  // Glorot-style uniform init, biases zero.
  const auto sizes = layer_sizes(config.mlp);
  Rng init_rng = Rng::substream(config.seed, "mlp:init");
  std::vector<MlpLayer> layers(sizes.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    layers[l].w.assign(out, std::vector<double>(in));
    layers[l].b.assign(out, 0.0);
    for (auto& row : layers[l].w) {
      for (double& w : row) w = init_rng.uniform(-limit, limit);
    }
  }

  auto model = std::make_unique<MlpModel>(config, std::move(layers), scaler, scale);

  // Adam state mirrors the layer shapes.
  std::vector<MlpLayer> m = zero_like(model->layers());
  std::vector<MlpLayer> v = zero_like(model->layers());
  std::vector<MlpLayer> weights = model->layers();

  Rng shuffle_rng = Rng::substream(config.seed, "mlp:shuffle");
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);

  const MlpConfig& mc = config.mlp;
  std::int64_t step = 0;
  std::vector<std::array<double, kFeatureCount>> batch_x;
  std::vector<int> batch_y;
  for (int epoch = 0; epoch < mc.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    for (std::size_t begin = 0; begin < order.size();
         begin += static_cast<std::size_t>(mc.batch_size)) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(mc.batch_size));
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = begin; k < end; ++k) {
        batch_x.push_back(inputs[order[k]]);
        batch_y.push_back(data.y[order[k]]);
      }
      const auto bg = model->loss_and_gradients(batch_x, batch_y);
      ++step;
      const double bc1 = 1.0 - std::pow(mc.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(mc.beta2, static_cast<double>(step));
      for (std::size_t l = 0; l < weights.size(); ++l) {
        auto update = [&](double& w, double& mw, double& vw, double g) {
          mw = mc.beta1 * mw + (1.0 - mc.beta1) * g;
          vw = mc.beta2 * vw + (1.0 - mc.beta2) * g * g;
          w -= mc.learning_rate * (mw / bc1) / (std::sqrt(vw / bc2) + mc.eps);
        };
        for (std::size_t o = 0; o < weights[l].b.size(); ++o) {
          update(weights[l].b[o], m[l].b[o], v[l].b[o], bg.grads[l].b[o]);
          for (std::size_t i = 0; i < weights[l].w[o].size(); ++i) {
            update(weights[l].w[o][i], m[l].w[o][i], v[l].w[o][i], bg.grads[l].w[o][i]);
          }
        }
      }
      model->set_layers(weights);
    }
  }
  return model;
}

std::unique_ptr<Model> mlp_from_params(const ClassifierConfig& config, const json& params) {
  std::vector<MlpLayer> layers;
  for (const auto& lj : params.at("layers")) {
    MlpLayer layer;
    layer.w = lj.at("w").get<std::vector<std::vector<double>>>();
    layer.b = lj.at("b").get<std::vector<double>>();
    if (layer.w.empty() || layer.w.size() != layer.b.size()) {
      throw IoError("model file: ragged mlp layer");
    }
    layers.push_back(std::move(layer));
  }
  MinMaxScaler scaler;
  bool fitted = false;
  const auto& sj = params.at("scaler");
  if (!sj.is_null()) {
    fitted = true;
    const auto active = sj.at("active").get<std::vector<bool>>();
    const auto lo = sj.at("lo").get<std::vector<double>>();
    const auto hi = sj.at("hi").get<std::vector<double>>();
    if (active.size() != kFeatureCount || lo.size() != kFeatureCount ||
        hi.size() != kFeatureCount) {
      throw IoError("model file: bad scaler shape");
    }
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      scaler.active[c] = active[c];
      scaler.lo[c] = lo[c];
      scaler.hi[c] = hi[c];
    }
  }
  try {
    return std::make_unique<MlpModel>(config, std::move(layers), scaler, fitted);
  } catch (const ValidationError& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
}

}  // namespace detail

}  // namespace fdx
