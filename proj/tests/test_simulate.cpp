#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "detectors.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "simulate.hpp"
#include "stats.hpp"
#include "test_util.hpp"

using namespace fdx;

namespace {

std::string score_scenario(const std::string& injections, const std::string& split) {
  return std::string(R"({
    "name": "mini",
    "fidelity": "score_level",
    "seed": 42,
    "start": "2024-01-01T00:00:00Z",
    "end": "2024-01-31T00:00:00Z",
    "parks": [
      {"park": "P1", "units": [
        {"unit": "U1", "components": [
          {"component": "Gen", "detector": "tuplet", "channels": 3},
          {"component": "Bearing", "detector": "bbcv"}
        ]}
      ]}
    ],
    "injections": [)") +
         injections + R"(],
    "split": )" + split + "}";
}

std::string signal_scenario() {
  return R"({
    "name": "mini_signal",
    "fidelity": "signal_level",
    "seed": 11,
    "start": "2024-01-01T00:00:00Z",
    "end": "2024-01-16T00:00:00Z",
    "snapshot_len": 64,
    "snapshot_every_steps": 4,
    "parks": [
      {"park": "P1", "units": [
        {"unit": "U1", "components": [
          {"component": "Gen", "detector": "tuplet", "channels": 3},
          {"component": "Bearing", "detector": "bbcv"}
        ]}
      ]}
    ],
    "injections": [],
    "split": {"train_cases": [], "test_cases": []}
  })";
}

}  // namespace

TEST_CASE("healthy score spread places one in a thousand above 1.0") {
  // sigma = 1 / Phi^-1(0.9995), so P(|N(0, sigma)| > 1) = 0.001.
  CHECK(healthy_score_sigma() ==
        doctest::Approx(1.0 / 3.2905267314918945).epsilon(1e-9));
}

TEST_CASE("score-level generation is deterministic") {
  auto spec = parse_scenario(score_scenario("", R"({"train_cases": [], "test_cases": []})"));
  auto a = generate_fleet(spec);
  auto b = generate_fleet(spec);
  CHECK(a.records == b.records);
  REQUIRE(a.records.size() == 2u * 30u * 144u);  // 2 entities x 30 days
}

TEST_CASE("healthy score-level records look like the calibrated baseline") {
  auto spec = parse_scenario(score_scenario("", R"({"train_cases": [], "test_cases": []})"));
  auto out = generate_fleet(spec);
  std::size_t above = 0, off = 0;
  for (const auto& r : out.records) {
    CHECK(r.score >= 0.0);
    if (r.score > 1.0) ++above;
    if (!r.operating) ++off;
  }
  double frac = static_cast<double>(above) / static_cast<double>(out.records.size());
  CHECK(frac < 0.005);  // 0.001 nominal; tight bound lives in the acceptance suite
  CHECK(off < out.records.size() / 4);  // outages exist but are rare
}

TEST_CASE("a zero-amplitude injection leaves score-level output unchanged") {
  std::string inj = R"({
    "case_no": 1, "park": "P1", "unit": "U1", "component": "Bearing",
    "start": "2024-01-05T00:00:00Z", "end": "2024-01-20T00:00:00Z",
    "profile": {"kind": "bearing_trend", "amplitude": 0.0, "ramp_shape": "linear"}
  })";
  auto with_amp0 = generate_fleet(
      parse_scenario(score_scenario(inj, R"({"train_cases": [1], "test_cases": []})")));
  auto without = generate_fleet(
      parse_scenario(score_scenario("", R"({"train_cases": [], "test_cases": []})")));
  CHECK(with_amp0.records == without.records);
}

TEST_CASE("a bearing ramp lifts scores toward the end of its interval") {
  std::string inj = R"({
    "case_no": 1, "park": "P1", "unit": "U1", "component": "Bearing",
    "start": "2024-01-05T00:00:00Z", "end": "2024-01-25T00:00:00Z",
    "profile": {"kind": "bearing_trend", "amplitude": 3.0, "ramp_shape": "linear",
                 "noise_sd": 0.1}
  })";
  auto spec = parse_scenario(score_scenario(inj, R"({"train_cases": [1], "test_cases": []})"));
  auto out = generate_fleet(spec);

  Timestamp start = parse_timestamp("2024-01-05T00:00:00Z");
  Timestamp end = parse_timestamp("2024-01-25T00:00:00Z");
  double late_sum = 0.0, early_sum = 0.0, outside_sum = 0.0;
  std::size_t late_n = 0, early_n = 0, outside_n = 0;
  for (const auto& r : out.records) {
    if (r.id.component != "Bearing") continue;
    if (r.ts < start || r.ts >= end) {
      outside_sum += r.score;
      ++outside_n;
    } else if (r.ts >= end - 3 * 86400) {
      late_sum += r.score;
      ++late_n;
    } else if (r.ts < start + 3 * 86400) {
      early_sum += r.score;
      ++early_n;
    }
  }
  CHECK(late_sum / static_cast<double>(late_n) > 2.0);      // ramp near full amplitude
  CHECK(early_sum / static_cast<double>(early_n) < 1.0);    // ramp still starting
  CHECK(outside_sum / static_cast<double>(outside_n) < 0.5);  // healthy baseline
  // Frames carry the ground truth for the injection.
  REQUIRE(out.frames.size() == 1);
  CHECK(out.frames[0].fault == FaultClass::Bearing);
  CHECK(out.frames[0].start == start);
  CHECK(out.frames[0].end == end);
  CHECK(out.split.train_cases == std::vector<int>{1});
  REQUIRE(out.split.train_units.size() == 1);
  CHECK(out.split.train_units[0].str() == "P1/U1");
}

TEST_CASE("signal-level generation produces wind, tuples and snapshots") {
  auto spec = parse_scenario(signal_scenario());
  auto out = generate_fleet(spec);
  CHECK(out.records.empty());

  const std::size_t steps = 15 * 144;
  auto wind_it = out.streams.wind.find(UnitId{"P1", "U1"});
  REQUIRE(wind_it != out.streams.wind.end());
  CHECK(wind_it->second.ts.size() == steps);
  for (double v : wind_it->second.speed) {
    CHECK(v >= 0.0);
    CHECK(v <= 25.0);
  }

  const EntityStreams* gen = out.streams.find(EntityId{"P1", "U1", "Gen"});
  REQUIRE(gen != nullptr);
  CHECK(gen->has_tuples());
  CHECK_FALSE(gen->has_vibration());
  REQUIRE(gen->tuples.channels.size() == 3);
  CHECK(gen->tuples.ts.size() == steps);

  const EntityStreams* bearing = out.streams.find(EntityId{"P1", "U1", "Bearing"});
  REQUIRE(bearing != nullptr);
  CHECK(bearing->has_vibration());
  CHECK(bearing->snapshots.size() == steps / 4);
  CHECK(bearing->snapshots.front().samples.size() == 64);

  auto again = generate_fleet(spec);
  CHECK(again.streams.entities.size() == out.streams.entities.size());
  CHECK(again.streams.find(EntityId{"P1", "U1", "Bearing"})->snapshots[5].samples ==
        bearing->snapshots[5].samples);
}

TEST_CASE("bearing injection edits only its interval and honors amplitude zero") {
  auto spec = parse_scenario(signal_scenario());
  auto base = generate_fleet(spec);
  EntityId id{"P1", "U1", "Bearing"};
  Timestamp start = parse_timestamp("2024-01-05T00:00:00Z");
  Timestamp end = parse_timestamp("2024-01-12T00:00:00Z");
  InjectionProfile prof;
  prof.kind = InjectionKind::BearingTrend;
  prof.amplitude = 2.0;
  prof.ramp_shape = RampShape::Linear;

  SUBCASE("zero-length interval is a no-op") {
    auto streams = base.streams;
    inject_bearing_fault(streams, id, start, start, prof, 42, 1);
    CHECK(streams.find(id)->snapshots[10].samples ==
          base.streams.find(id)->snapshots[10].samples);
  }
  SUBCASE("zero amplitude leaves every sample byte-identical") {
    auto streams = base.streams;
    InjectionProfile silent = prof;
    silent.amplitude = 0.0;
    inject_bearing_fault(streams, id, start, end, silent, 42, 1);
    const auto& a = streams.find(id)->snapshots;
    const auto& b = base.streams.find(id)->snapshots;
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].samples == b[i].samples);
  }
  SUBCASE("an interval outside the stream is rejected") {
    auto streams = base.streams;
    CHECK_THROWS_AS(inject_bearing_fault(streams, id, start - 365LL * 86400, end, prof, 42, 1),
                    ValidationError);
    CHECK_THROWS_AS(inject_bearing_fault(streams, id, start, start - 600, prof, 42, 1),
                    ValidationError);
  }
  SUBCASE("impacts grow along the ramp and stay inside the interval") {
    auto streams = base.streams;
    inject_bearing_fault(streams, id, start, end, prof, 42, 1);
    const auto& after = streams.find(id)->snapshots;
    const auto& before = base.streams.find(id)->snapshots;
    double first_delta = -1.0, last_delta = -1.0;
    for (std::size_t i = 0; i < after.size(); ++i) {
      double delta = 0.0;
      for (std::size_t k = 0; k < after[i].samples.size(); ++k) {
        delta += std::abs(after[i].samples[k] - before[i].samples[k]);
      }
      if (after[i].ts < start || after[i].ts >= end) {
        CHECK(delta == 0.0);
      } else {
        if (first_delta < 0.0) first_delta = delta;
        last_delta = delta;
      }
    }
    CHECK(last_delta > first_delta);  // linear ramp: late impacts are stronger
  }
}

TEST_CASE("sensor injections corrupt one channel and loose contact leaves gaps") {
  auto spec = parse_scenario(signal_scenario());
  auto base = generate_fleet(spec);
  EntityId id{"P1", "U1", "Gen"};
  Timestamp start = parse_timestamp("2024-01-09T00:00:00Z");
  Timestamp end = parse_timestamp("2024-01-14T00:00:00Z");

  SUBCASE("a large offset pushes the statistic far past healthy calibration") {
    auto streams = base.streams;
    InjectionProfile prof;
    prof.kind = InjectionKind::SensorVariance;
    prof.amplitude = 5.0;
    inject_sensor_fault(streams, id, start, end, prof, 42, 2);

    const auto& tuples = streams.find(id)->tuples;
    // Calibrate on the untouched 8-day head, long enough for the
    // 1000-sample calibration floor.
    std::size_t head = 8 * 144;
    std::vector<double> healthy_stats;
    for (std::size_t i = 0; i < head; ++i) {
      healthy_stats.push_back(tuplet_statistic(tuples.channels, i, i + 1));
    }
    auto cal = calibrate(healthy_stats, 0.001, DetectorKind::Tuplet);

    std::size_t first_in = static_cast<std::size_t>((start - spec.start) / kGridStepSeconds);
    std::size_t last_in = static_cast<std::size_t>((end - spec.start) / kGridStepSeconds);
    double mean_stat = tuplet_statistic(tuples.channels, first_in, last_in);
    CHECK(mean_stat > 10.0 * cal.reference_statistic);
  }
  SUBCASE("loose contact alternates corrupted and clean segments") {
    auto streams = base.streams;
    InjectionProfile prof;
    prof.kind = InjectionKind::SensorLooseContact;
    prof.amplitude = 5.0;
    prof.faulty_segment_steps = 288;
    prof.healthy_segment_steps = 288;  // 2-day healthy stretches
    inject_sensor_fault(streams, id, start, end, prof, 42, 2);

    const auto& after = streams.find(id)->tuples;
    const auto& before = base.streams.find(id)->tuples;
    std::size_t first_in = static_cast<std::size_t>((start - spec.start) / kGridStepSeconds);

    // First faulty segment is corrupted...
    bool changed = false;
    for (std::size_t k = 0; k < 288; ++k) {
      if (after.channels[2][first_in + k] != before.channels[2][first_in + k]) changed = true;
    }
    CHECK(changed);
    // ...the following healthy segment is untouched on every channel.
    for (std::size_t k = 288; k < 576; ++k) {
      for (std::size_t c = 0; c < 3; ++c) {
        CHECK(after.channels[c][first_in + k] == before.channels[c][first_in + k]);
      }
    }
  }
}

TEST_CASE("raw streams survive a disk round trip") {
  auto spec = parse_scenario(signal_scenario());
  auto out = generate_fleet(spec);
  fdx::test::TempDir tmp("raw_streams");
  write_raw_streams(tmp.file("raw"), out.streams);
  auto back = read_raw_streams(tmp.file("raw"));

  auto wind_it = back.wind.find(UnitId{"P1", "U1"});
  REQUIRE(wind_it != back.wind.end());
  CHECK(wind_it->second.ts == out.streams.wind.at(UnitId{"P1", "U1"}).ts);
  CHECK(wind_it->second.speed == out.streams.wind.at(UnitId{"P1", "U1"}).speed);

  const EntityStreams* gen = back.find(EntityId{"P1", "U1", "Gen"});
  REQUIRE(gen != nullptr);
  CHECK(gen->tuples.ts == out.streams.find(EntityId{"P1", "U1", "Gen"})->tuples.ts);
  CHECK(gen->tuples.channels == out.streams.find(EntityId{"P1", "U1", "Gen"})->tuples.channels);

  const EntityStreams* bearing = back.find(EntityId{"P1", "U1", "Bearing"});
  const EntityStreams* orig = out.streams.find(EntityId{"P1", "U1", "Bearing"});
  REQUIRE(bearing != nullptr);
  REQUIRE(bearing->snapshots.size() == orig->snapshots.size());
  for (std::size_t i = 0; i < bearing->snapshots.size(); ++i) {
    CHECK(bearing->snapshots[i].ts == orig->snapshots[i].ts);
    REQUIRE(bearing->snapshots[i].samples.size() == orig->snapshots[i].samples.size());
    for (std::size_t k = 0; k < bearing->snapshots[i].samples.size(); ++k) {
      // Samples are stored as 32-bit floats.
      double expect = static_cast<double>(static_cast<float>(orig->snapshots[i].samples[k]));
      CHECK(bearing->snapshots[i].samples[k] == expect);
    }
  }

  SUBCASE("corrupt vibration data is an error") {
    fdx::test::spit(tmp.file("raw") + "/vibration.bin", "GARBAGE");
    CHECK_THROWS_AS(read_raw_streams(tmp.file("raw")), IoError);
  }
  SUBCASE("a missing stream file is an error") {
    std::filesystem::remove(tmp.file("raw") + "/wind.csv");
    CHECK_THROWS(read_raw_streams(tmp.file("raw")));
  }
}

TEST_CASE("scenario validation rejects inconsistent injections") {
  SUBCASE("unknown entity") {
    std::string inj = R"({
      "case_no": 1, "park": "P9", "unit": "U1", "component": "Bearing",
      "start": "2024-01-05T00:00:00Z", "end": "2024-01-20T00:00:00Z",
      "profile": {"kind": "bearing_trend", "amplitude": 1.0}
    })";
    CHECK_THROWS_AS(
        parse_scenario(score_scenario(inj, R"({"train_cases": [1], "test_cases": []})")),
        ValidationError);
  }
  SUBCASE("detector and fault kind must be compatible") {
    std::string inj = R"({
      "case_no": 1, "park": "P1", "unit": "U1", "component": "Gen",
      "start": "2024-01-05T00:00:00Z", "end": "2024-01-20T00:00:00Z",
      "profile": {"kind": "bearing_trend", "amplitude": 1.0}
    })";
    CHECK_THROWS_AS(
        parse_scenario(score_scenario(inj, R"({"train_cases": [1], "test_cases": []})")),
        ValidationError);
  }
  SUBCASE("split must reference known cases") {
    CHECK_THROWS_AS(
        parse_scenario(score_scenario("", R"({"train_cases": [5], "test_cases": []})")),
        ValidationError);
  }
  SUBCASE("injection interval must lie inside the scenario range") {
    std::string inj = R"({
      "case_no": 1, "park": "P1", "unit": "U1", "component": "Bearing",
      "start": "2023-12-05T00:00:00Z", "end": "2024-01-20T00:00:00Z",
      "profile": {"kind": "bearing_trend", "amplitude": 1.0}
    })";
    CHECK_THROWS_AS(
        parse_scenario(score_scenario(inj, R"({"train_cases": [1], "test_cases": []})")),
        ValidationError);
  }
}
