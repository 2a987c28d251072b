#pragma once

#include "model.hpp"

namespace fdx::detail {

std::unique_ptr<Model> train_above_one(const ClassifierConfig& config, const TrainData& data);
std::unique_ptr<Model> above_one_from_params(const ClassifierConfig& config,
                                             const nlohmann::json& params);

std::unique_ptr<Model> train_random_forest(const ClassifierConfig& config, const TrainData& data);
std::unique_ptr<Model> random_forest_from_params(const ClassifierConfig& config,
                                                 const nlohmann::json& params);

std::unique_ptr<Model> train_gbm(const ClassifierConfig& config, const TrainData& data);
std::unique_ptr<Model> gbm_from_params(const ClassifierConfig& config,
                                       const nlohmann::json& params);

std::unique_ptr<Model> train_mlp(const ClassifierConfig& config, const TrainData& data);
std::unique_ptr<Model> mlp_from_params(const ClassifierConfig& config,
                                       const nlohmann::json& params);

// Train-time input validation shared by the learned models.
void check_train_data(const TrainData& data, bool require_all_classes);

}  // namespace fdx::detail
