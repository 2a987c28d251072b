#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "common.hpp"
#include "detectors.hpp"
#include "fft.hpp"
#include "mann_kendall.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "timegrid.hpp"

using namespace fdx;

namespace {

Timestamp ts0() { return parse_timestamp("2024-01-01T00:00:00Z"); }

RawStreams one_entity_streams(const std::vector<double>& wind_speeds,
                              std::size_t snapshot_len) {
  RawStreams streams;
  EntityId id{"P1", "U1", "Bearing"};
  WindSeries wind;
  EntityStreams es;
  es.id = id;
  for (std::size_t i = 0; i < wind_speeds.size(); ++i) {
    Timestamp t = ts0() + static_cast<Timestamp>(i) * kGridStepSeconds;
    wind.ts.push_back(t);
    wind.speed.push_back(wind_speeds[i]);
    VibrationSnapshot snap;
    snap.ts = t;
    snap.samples.assign(snapshot_len, 0.1 * static_cast<double>(i));
    es.snapshots.push_back(std::move(snap));
  }
  streams.wind[UnitId{"P1", "U1"}] = std::move(wind);
  streams.entities.push_back(std::move(es));
  return streams;
}

}  // namespace

TEST_CASE("calibration construction pins the score threshold") {
  auto cal = make_calibration(DetectorKind::Bbcv, 1.0, 0.001);
  CHECK(cal.z_alpha == doctest::Approx(3.0902).epsilon(1e-4));
  CHECK(cal.reference_statistic == 1.0);
  CHECK_THROWS_AS(make_calibration(DetectorKind::Bbcv, 0.0, 0.001), ValidationError);
  CHECK_THROWS_AS(make_calibration(DetectorKind::Bbcv, -2.0, 0.001), ValidationError);
  CHECK_THROWS_AS(make_calibration(DetectorKind::Bbcv, 1.0, 0.0), ValidationError);
  CHECK_THROWS_AS(make_calibration(DetectorKind::Bbcv, 1.0, 0.5), ValidationError);
}

TEST_CASE("vibration feature vector has 11 named entries") {
  const auto& names = bbcv_feature_names();
  REQUIRE(names.size() == 11);
  CHECK(names[0] == "mean");
  CHECK(names[2] == "skewness");
  CHECK(names[10] == "band3");
}

TEST_CASE("vibration snapshot length must be a power of two of at least 64") {
  CHECK_THROWS_AS(vibration_features(std::vector<double>(32, 0.0)), ValidationError);
  CHECK_THROWS_AS(vibration_features(std::vector<double>(100, 0.0)), ValidationError);
  CHECK_NOTHROW(vibration_features(std::vector<double>(64, 1.0)));
}

TEST_CASE("time-domain moments match direct computation") {
  Rng rng(11);
  std::vector<double> snap(128);
  for (auto& s : snap) s = rng.uniform(-2.0, 2.0);
  auto f = vibration_features(snap);

  double m = std::accumulate(snap.begin(), snap.end(), 0.0) / 128.0;
  CHECK(f[0] == doctest::Approx(m).epsilon(1e-12));
  double sq = 0.0, pk = 0.0;
  for (double s : snap) {
    sq += s * s;
    pk = std::max(pk, std::abs(s));
  }
  CHECK(f[1] == doctest::Approx(std::sqrt(sq / 128.0)).epsilon(1e-12));
  CHECK(f[4] == doctest::Approx(pk).epsilon(1e-12));
}

TEST_CASE("a pure sine has zero skewness") {
  std::vector<double> snap(1024);
  for (std::size_t t = 0; t < snap.size(); ++t) {
    snap[t] = std::sin(2.0 * std::numbers::pi * 37.0 * static_cast<double>(t) / 1024.0);
  }
  auto f = vibration_features(snap);
  CHECK(std::abs(f[2]) < 1e-6);
}

TEST_CASE("a long Gaussian snapshot has near-zero excess kurtosis") {
  Rng rng(99);
  std::vector<double> snap(65536);
  for (auto& s : snap) s = rng.gaussian();
  auto f = vibration_features(snap);
  CHECK(f[3] > -0.1);
  CHECK(f[3] < 0.1);
}

TEST_CASE("band energies partition the non-DC spectral energy") {
  Rng rng(4);
  std::vector<double> snap(256);
  for (auto& s : snap) s = rng.uniform(-1.0, 1.0);
  auto f = vibration_features(snap);

  auto mag = magnitude_spectrum(snap);
  double non_dc_energy = 0.0;
  for (std::size_t k = 1; k < mag.size(); ++k) non_dc_energy += mag[k] * mag[k];
  CHECK(f[7] + f[8] + f[9] + f[10] ==
        doctest::Approx(non_dc_energy).epsilon(1e-10));
  // Log spacing pushes most bins into the upper bands.
  CHECK(f[10] > 0.0);
  CHECK(f[7] >= 0.0);
}

TEST_CASE("capture keeps exactly the snapshots inside the wind band") {
  std::vector<double> wind(20, 8.0);
  auto streams = one_entity_streams(wind, 64);
  EntityId id{"P1", "U1", "Bearing"};

  SUBCASE("steady wind inside the band keeps everything") {
    auto kept = capture_condition_windows(streams, id, 6.0, 10.0);
    CHECK(kept.size() == 20);
  }
  SUBCASE("a band above the maximum wind keeps nothing") {
    std::vector<double> gusty(20);
    for (std::size_t i = 0; i < gusty.size(); ++i) gusty[i] = 4.0 + 0.4 * static_cast<double>(i);
    auto s2 = one_entity_streams(gusty, 64);  // max 11.6 < 20
    CHECK(capture_condition_windows(s2, id, 20.0, 25.0).empty());
  }
  SUBCASE("band edges are inclusive and the filter matches a direct scan") {
    Rng rng(8);
    std::vector<double> speeds(50);
    for (auto& v : speeds) v = rng.uniform(0.0, 15.0);
    speeds[3] = 5.0;   // exactly on the lower edge
    speeds[7] = 11.0;  // exactly on the upper edge
    auto s3 = one_entity_streams(speeds, 64);
    auto kept = capture_condition_windows(s3, id, 5.0, 11.0);
    std::size_t expect = 0;
    for (double v : speeds) {
      if (v >= 5.0 && v <= 11.0) ++expect;
    }
    CHECK(kept.size() == expect);
    for (const auto& snap : kept) {
      auto idx = static_cast<std::size_t>((snap.ts - ts0()) / kGridStepSeconds);
      CHECK(speeds[idx] >= 5.0);
      CHECK(speeds[idx] <= 11.0);
    }
  }
  SUBCASE("inverted band is rejected") {
    CHECK_THROWS_AS(capture_condition_windows(streams, id, 10.0, 6.0), ValidationError);
  }
}

TEST_CASE("trend score is the standardized statistic over its threshold") {
  auto cal = make_calibration(DetectorKind::Bbcv, 1.0, 0.001);

  std::vector<double> flat(144, 2.0);
  CHECK(bbcv_trend_score(flat, cal) == 0.0);

  std::vector<double> rising(144);
  for (std::size_t i = 0; i < rising.size(); ++i) rising[i] = static_cast<double>(i);
  double score = bbcv_trend_score(rising, cal);
  auto mk = mann_kendall(rising);
  CHECK(score == doctest::Approx(mk.z / cal.z_alpha).epsilon(1e-12));
  CHECK(score == doctest::Approx(5.754).epsilon(1e-3));  // 17.78 / 3.09
  CHECK(score > 1.0);

  std::vector<double> falling(rising.rbegin(), rising.rend());
  CHECK(bbcv_trend_score(falling, cal) == 0.0);  // negative trend clamps to zero
}

TEST_CASE("score stream starts once enough history exists and uses a trailing window") {
  auto cal = make_calibration(DetectorKind::Bbcv, 1.0, 0.001);
  EntityId id{"P1", "U1", "Bearing"};

  FeatureHistory h;
  h.feature = "rms";
  for (int i = 0; i < 30; ++i) {
    h.ts.push_back(ts0() + i * kGridStepSeconds);
    h.values.push_back(static_cast<double>(i));
  }

  auto records = bbcv_scores(id, {h}, cal, 12, 10);
  REQUIRE(records.size() == 21);  // indices 9..29
  CHECK(records.front().ts == h.ts[9]);
  CHECK(records.back().ts == h.ts[29]);
  CHECK(records.front().feature == "rms");
  CHECK(records.front().detector == DetectorKind::Bbcv);

  // The last record sees only the trailing 12 points.
  std::span<const double> tail(h.values.data() + 18, 12);
  CHECK(records.back().score ==
        doctest::Approx(bbcv_trend_score(tail, cal)).epsilon(1e-12));

  SUBCASE("short history is an error") {
    FeatureHistory tiny;
    tiny.feature = "rms";
    for (int i = 0; i < 5; ++i) {
      tiny.ts.push_back(ts0() + i * kGridStepSeconds);
      tiny.values.push_back(1.0);
    }
    CHECK_THROWS_AS(bbcv_scores(id, {tiny}, cal, 144, 10), ValidationError);
  }
  SUBCASE("min_history below the trend test's floor is clamped to 4") {
    auto records2 = bbcv_scores(id, {h}, cal, 12, 1);
    CHECK(records2.size() == 27);  // indices 3..29
  }
}

TEST_CASE("cross-channel statistic averages the per-timestep population variance") {
  std::vector<std::vector<double>> identical = {
      {1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}};
  CHECK(tuplet_statistic(identical, 0, 3) == doctest::Approx(0.0));

  // Channels pinned at (10, 10, 13): per-step variance 2.0 at every step.
  std::vector<std::vector<double>> pinned = {
      std::vector<double>(6, 10.0), std::vector<double>(6, 10.0),
      std::vector<double>(6, 13.0)};
  CHECK(tuplet_statistic(pinned, 0, 6) == doctest::Approx(2.0));

  auto cal = make_calibration(DetectorKind::Tuplet, 0.5, 0.001);
  CHECK(tuplet_score(pinned, 0, 6, cal) == doctest::Approx(4.0));

  SUBCASE("windowing matches a direct recomputation") {
    Rng rng(21);
    std::vector<std::vector<double>> ch(3, std::vector<double>(40));
    for (auto& c : ch) {
      for (auto& v : c) v = rng.uniform(0.0, 5.0);
    }
    double expect = 0.0;
    for (std::size_t t = 10; t < 25; ++t) {
      std::vector<double> col = {ch[0][t], ch[1][t], ch[2][t]};
      expect += population_variance(col);
    }
    expect /= 15.0;
    CHECK(tuplet_statistic(ch, 10, 25) == doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("fewer than two channels or an empty window is an error") {
    std::vector<std::vector<double>> single = {{1.0, 2.0}};
    CHECK_THROWS_AS(tuplet_statistic(single, 0, 2), ValidationError);
    CHECK_THROWS_AS(tuplet_statistic(identical, 2, 2), ValidationError);
  }
}

TEST_CASE("calibration reference is the healthy upper quantile") {
  std::vector<double> healthy(1000);
  std::iota(healthy.begin(), healthy.end(), 1.0);
  std::shuffle(healthy.begin(), healthy.end(), std::mt19937{3});  // order must not matter

  auto cal = calibrate(healthy, 0.001, DetectorKind::Tuplet);
  CHECK(cal.reference_statistic == doctest::Approx(999.001).epsilon(1e-9));
  CHECK(cal.alpha == 0.001);

  std::vector<double> flat(1500, 0.37);
  CHECK(calibrate(flat, 0.001, DetectorKind::Tuplet).reference_statistic ==
        doctest::Approx(0.37));

  std::vector<double> few(10, 1.0);
  CHECK_THROWS_AS(calibrate(few, 0.001, DetectorKind::Tuplet), ValidationError);
}

TEST_CASE("calibration JSON lists one entry per entity") {
  auto cal = make_calibration(DetectorKind::Tuplet, 2.5, 0.001);
  std::string json = calibration_to_json({{EntityId{"P1", "U1", "Gen"}, cal}});
  CHECK(json.find("\"P1\"") != std::string::npos);
  CHECK(json.find("\"tuplet\"") != std::string::npos);
  CHECK(json.find("2.5") != std::string::npos);
}
