#include "detectors.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "common.hpp"
#include "fft.hpp"
#include "mann_kendall.hpp"
#include "stats.hpp"

namespace fdx {

DetectorCalibration make_calibration(DetectorKind detector, double reference_statistic,
                                     double alpha) {
  if (!(reference_statistic > 0.0)) {
    throw ValidationError("calibration reference statistic must be positive");
  }
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw ValidationError("calibration alpha must lie in (0, 0.5)");
  }
  DetectorCalibration cal;
  cal.detector = detector;
  cal.reference_statistic = reference_statistic;
  cal.alpha = alpha;
  cal.z_alpha = normal_quantile(1.0 - alpha);
  return cal;
}

const std::array<std::string, kBbcvFeatureCount>& bbcv_feature_names() {
  static const std::array<std::string, kBbcvFeatureCount> names = {
      "mean",          "rms",   "skewness", "kurtosis", "peak",  "spectral_mean",
      "spectral_kurt", "band0", "band1",    "band2",    "band3",
  };
  return names;
}

BbcvFeatureSet vibration_features(std::span<const double> snapshot) {
  const std::size_t n = snapshot.size();
  if (n < 64 || !is_power_of_two(n)) {
    throw ValidationError("vibration snapshot length must be a power of two >= 64");
  }
  BbcvFeatureSet f;
  f.values[0] = mean(snapshot);
  f.values[1] = rms(snapshot);
  f.values[2] = skewness(snapshot);
  f.values[3] = excess_kurtosis(snapshot);
  f.values[4] = peak(snapshot);

  std::vector<double> mag = magnitude_spectrum(snapshot);
  std::span<const double> positive(mag.data() + 1, mag.size() - 1);  // DC excluded
  f.values[5] = mean(positive);
  f.values[6] = excess_kurtosis(positive);

  // Four log-spaced energy bands over (0, Nyquist]; bin k lands in band
  // floor(4 * ln k / ln(n/2)).
  const double denom = std::log(static_cast<double>(n / 2));
  std::array<double, 4> bands{};
  for (std::size_t k = 1; k < mag.size(); ++k) {
    int b = static_cast<int>(std::floor(4.0 * std::log(static_cast<double>(k)) / denom));
    b = std::clamp(b, 0, 3);
    bands[static_cast<std::size_t>(b)] += mag[k] * mag[k];
  }
  for (std::size_t b = 0; b < 4; ++b) f.values[7 + b] = bands[b];
  return f;
}

std::vector<VibrationSnapshot> capture_condition_windows(const RawStreams& streams,
                                                         const EntityId& entity,
                                                         double v_lo, double v_hi) {
  if (!(v_lo < v_hi)) throw ValidationError("wind band must satisfy v_lo < v_hi");
  const EntityStreams* e = streams.find(entity);
  if (!e) throw ValidationError("unknown entity " + entity.str());
  auto wind_it = streams.wind.find(UnitId{entity.park, entity.unit});
  if (wind_it == streams.wind.end()) {
    throw ValidationError("entity " + entity.str() + " has no wind signal");
  }
  const WindSeries& wind = wind_it->second;
  std::vector<VibrationSnapshot> out;
  for (const auto& snap : e->snapshots) {
    auto it = std::lower_bound(wind.ts.begin(), wind.ts.end(), snap.ts);
    if (it == wind.ts.end() || *it != snap.ts) continue;
    double v = wind.speed[static_cast<std::size_t>(it - wind.ts.begin())];
    if (v >= v_lo && v <= v_hi) out.push_back(snap);
  }
  return out;
}

double bbcv_trend_score(std::span<const double> history, const DetectorCalibration& cal) {
  MannKendallResult mk = mann_kendall(history);
  return std::max(0.0, mk.z / cal.z_alpha);
}

std::vector<AnomalyRecord> bbcv_scores(const EntityId& entity,
                                       const std::vector<FeatureHistory>& histories,
                                       const DetectorCalibration& cal,
                                       std::size_t trend_window,
                                       std::size_t min_history) {
  min_history = std::max<std::size_t>(min_history, 4);
  std::vector<AnomalyRecord> out;
  for (const auto& h : histories) {
    if (h.values.size() < min_history) {
      throw ValidationError("bbcv history for feature '" + h.feature + "' of " +
                            entity.str() + " is too short (" +
                            std::to_string(h.values.size()) + " < " +
                            std::to_string(min_history) + ")");
    }
    for (std::size_t i = min_history - 1; i < h.values.size(); ++i) {
      std::size_t begin = i + 1 > trend_window ? i + 1 - trend_window : 0;
      std::span<const double> window(h.values.data() + begin, i + 1 - begin);
      AnomalyRecord r;
      r.ts = h.ts[i];
      r.id = entity;
      r.detector = DetectorKind::Bbcv;
      r.feature = h.feature;
      r.score = bbcv_trend_score(window, cal);
      out.push_back(std::move(r));
    }
  }
  return out;
}

double tuplet_statistic(const std::vector<std::vector<double>>& channels,
                        std::size_t begin, std::size_t end) {
  if (channels.size() < 2) throw ValidationError("tuplet needs at least 2 channels");
  if (begin >= end) throw ValidationError("tuplet window must be non-empty");
  std::vector<double> at_t(channels.size());
  double sum = 0.0;
  for (std::size_t t = begin; t < end; ++t) {
    for (std::size_t c = 0; c < channels.size(); ++c) at_t[c] = channels[c][t];
    sum += population_variance(at_t);
  }
  return sum / static_cast<double>(end - begin);
}

double tuplet_score(const std::vector<std::vector<double>>& channels,
                    std::size_t begin, std::size_t end, const DetectorCalibration& cal) {
  return tuplet_statistic(channels, begin, end) / cal.reference_statistic;
}

DetectorCalibration calibrate(std::vector<double> healthy_statistics, double alpha,
                              DetectorKind detector) {
  if (healthy_statistics.size() < 1000) {
    throw ValidationError("calibration needs at least 1000 healthy statistics, got " +
                          std::to_string(healthy_statistics.size()));
  }
  std::sort(healthy_statistics.begin(), healthy_statistics.end());
  double reference = quantile(healthy_statistics, 1.0 - alpha);
  return make_calibration(detector, reference, alpha);
}

std::string calibration_to_json(
    const std::vector<std::pair<EntityId, DetectorCalibration>>& cals) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [id, cal] : cals) {
    nlohmann::json j{{"detector", cal.detector == DetectorKind::Tuplet ? "tuplet" : "bbcv"},
                     {"reference_statistic", cal.reference_statistic},
                     {"alpha", cal.alpha},
                     {"z_alpha", cal.z_alpha}};
    if (!id.park.empty()) {
      j["park"] = id.park;
      j["unit"] = id.unit;
      j["component"] = id.component;
    }
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

}  // namespace fdx
