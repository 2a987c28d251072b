#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "streams.hpp"

namespace fdx {

// Healthy-period normalization anchoring the "above 1.0 = anomalous at
// alpha" convention.
struct DetectorCalibration {
  DetectorKind detector = DetectorKind::Tuplet;
  double reference_statistic = 1.0;
  double alpha = 0.001;
  double z_alpha = 0.0;
};

DetectorCalibration make_calibration(DetectorKind detector, double reference_statistic,
                                     double alpha);

constexpr std::size_t kBbcvFeatureCount = 11;
const std::array<std::string, kBbcvFeatureCount>& bbcv_feature_names();

// Time-domain moments of the raw window plus spectral statistics of the
// one-sided magnitude spectrum (DC excluded from the spectral moments).
struct BbcvFeatureSet {
  std::array<double, kBbcvFeatureCount> values{};

  double operator[](std::size_t i) const { return values[i]; }
};

// Snapshot length must be a power of two and at least 64 samples.
BbcvFeatureSet vibration_features(std::span<const double> snapshot);

// Snapshots whose concurrent 10-minute wind speed lies in [v_lo, v_hi].
std::vector<VibrationSnapshot> capture_condition_windows(const RawStreams& streams,
                                                         const EntityId& entity,
                                                         double v_lo, double v_hi);

// max(0, Z / z_alpha) over the trailing history, so score > 1.0 holds
// exactly when the one-sided Mann-Kendall p-value drops below alpha.
double bbcv_trend_score(std::span<const double> history, const DetectorCalibration& cal);

struct FeatureHistory {
  std::string feature;
  std::vector<Timestamp> ts;
  std::vector<double> values;
};

// One record per feature per evaluation time (every snapshot once at least
// min_history points exist); the trend is scored over the trailing
// trend_window points.
std::vector<AnomalyRecord> bbcv_scores(const EntityId& entity,
                                       const std::vector<FeatureHistory>& histories,
                                       const DetectorCalibration& cal,
                                       std::size_t trend_window = 144,
                                       std::size_t min_history = 10);

// Mean over window timesteps of the cross-channel population variance.
double tuplet_statistic(const std::vector<std::vector<double>>& channels,
                        std::size_t begin, std::size_t end);
double tuplet_score(const std::vector<std::vector<double>>& channels,
                    std::size_t begin, std::size_t end, const DetectorCalibration& cal);

// reference_statistic = empirical (1 - alpha) quantile of healthy statistics
// (linear interpolation). Needs at least 1000 samples.
DetectorCalibration calibrate(std::vector<double> healthy_statistics, double alpha,
                              DetectorKind detector);

std::string calibration_to_json(const std::vector<std::pair<EntityId, DetectorCalibration>>& cals);

}  // namespace fdx
