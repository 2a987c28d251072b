#include <doctest.h>

#include "common.hpp"
#include "domain.hpp"
#include "test_util.hpp"

using namespace fdx;

namespace {

Timestamp ts0() { return parse_timestamp("2024-01-01T00:00:00Z"); }

AnomalyRecord rec(Timestamp ts, const char* comp, DetectorKind kind,
                  const std::string& feature, double score, bool operating = true) {
  AnomalyRecord r;
  r.ts = ts;
  r.id = {"P1", "U1", comp};
  r.detector = kind;
  r.feature = feature;
  r.score = score;
  r.operating = operating;
  return r;
}

}  // namespace

TEST_CASE("fault classes map to stable codes and names") {
  CHECK(fault_class_code(FaultClass::Normal) == 0);
  CHECK(fault_class_code(FaultClass::Bearing) == 1);
  CHECK(fault_class_code(FaultClass::Sensor) == 2);
  for (int c = 0; c < kNumClasses; ++c) {
    CHECK(fault_class_code(fault_class_from_code(c)) == c);
  }
  CHECK(fault_class_name(FaultClass::Normal) == "Normal");
  CHECK(fault_class_name(FaultClass::Bearing) == "BearingFault");
  CHECK(fault_class_name(FaultClass::Sensor) == "SensorFault");
  CHECK_THROWS_AS(fault_class_from_code(3), ValidationError);
  CHECK_THROWS_AS(fault_class_from_code(-1), ValidationError);
}

TEST_CASE("detector column names round-trip, including per-feature columns") {
  CHECK(detector_column(DetectorKind::Tuplet, "") == "tuplet");
  CHECK(detector_column(DetectorKind::Bbcv, "") == "bbcv");
  CHECK(detector_column(DetectorKind::Bbcv, "kurtosis") == "bbcv:kurtosis");

  DetectorKind kind;
  std::string feature;
  parse_detector_column("bbcv:rms", kind, feature);
  CHECK(kind == DetectorKind::Bbcv);
  CHECK(feature == "rms");
  parse_detector_column("tuplet", kind, feature);
  CHECK(kind == DetectorKind::Tuplet);
  CHECK(feature.empty());
  // Column parsing is a deserialization step, so garbage is a file error.
  CHECK_THROWS_AS(parse_detector_column("sonar", kind, feature), IoError);
}

TEST_CASE("anomaly CSV round-trips records exactly") {
  Timestamp t0 = ts0();
  std::vector<AnomalyRecord> records = {
      rec(t0, "GeneratorPhases", DetectorKind::Tuplet, "", 0.25),
      rec(t0, "Bearing", DetectorKind::Bbcv, "kurtosis", 1.5),
      rec(t0 + 600, "Bearing", DetectorKind::Bbcv, "rms", 0.0, false),
      rec(t0 + 1200, "Bearing", DetectorKind::Bbcv, "rms", 3.25197265625),
  };
  std::string csv = anomaly_records_to_csv(records);
  CHECK(csv.rfind("ts,park,unit,component,detector,score,operating", 0) == 0);
  auto back = anomaly_records_from_csv(csv);
  CHECK(back == records);

  fdx::test::TempDir tmp("anomaly_csv");
  write_anomaly_csv(tmp.file("scores.csv"), records);
  CHECK(read_anomaly_csv(tmp.file("scores.csv")) == records);
}

TEST_CASE("anomaly CSV rejects corrupt content") {
  std::string good = anomaly_records_to_csv(
      {rec(ts0(), "Bearing", DetectorKind::Bbcv, "rms", 1.0)});
  CHECK_THROWS_AS(anomaly_records_from_csv("not,a,header\n1,2,3\n"), IoError);
  CHECK_THROWS_AS(
      anomaly_records_from_csv(
          "ts,park,unit,component,detector,score,operating\n2024-01-01T00:00:00Z,P1,U1\n"),
      IoError);
  CHECK_THROWS_AS(
      anomaly_records_from_csv(
          "ts,park,unit,component,detector,score,operating\n"
          "2024-01-01T00:00:00Z,P1,U1,C1,bbcv:rms,abc,1\n"),
      IoError);
  CHECK(anomaly_records_from_csv(good).size() == 1);
}

TEST_CASE("fault frames validate intervals and sort by entity and start") {
  Timestamp t0 = ts0();
  EntityId e1{"P1", "U1", "Bearing"};
  EntityId e2{"P1", "U1", "Generator"};

  std::vector<FaultFrame> frames = {
      {e2, FaultClass::Sensor, t0 + 7200, t0 + 9600, 2},
      {e1, FaultClass::Bearing, t0, t0 + 3600, 1},
      {e1, FaultClass::Bearing, t0 + 3600, t0 + 7200, 3},  // touching is not overlap
  };
  auto sorted = validate_fault_frames(frames);
  REQUIRE(sorted.size() == 3);
  CHECK(sorted[0].case_no == 1);
  CHECK(sorted[1].case_no == 3);
  CHECK(sorted[2].case_no == 2);

  SUBCASE("inverted or empty intervals are rejected") {
    std::vector<FaultFrame> bad = {{e1, FaultClass::Bearing, t0 + 600, t0 + 600, 4}};
    CHECK_THROWS_AS(validate_fault_frames(bad), ValidationError);
  }
  SUBCASE("Normal frames are rejected") {
    std::vector<FaultFrame> bad = {{e1, FaultClass::Normal, t0, t0 + 600, 4}};
    CHECK_THROWS_AS(validate_fault_frames(bad), ValidationError);
  }
  SUBCASE("overlapping frames on one entity are rejected") {
    std::vector<FaultFrame> bad = {
        {e1, FaultClass::Bearing, t0, t0 + 3600, 4},
        {e1, FaultClass::Sensor, t0 + 3000, t0 + 7200, 5},
    };
    CHECK_THROWS_AS(validate_fault_frames(bad), ValidationError);
  }
}

TEST_CASE("fault frames JSON round-trips") {
  Timestamp t0 = ts0();
  std::vector<FaultFrame> frames = {
      {{"P1", "U1", "Bearing"}, FaultClass::Bearing, t0, t0 + 3600, 1},
      {{"P2", "U3", "Generator"}, FaultClass::Sensor, t0 + 600, t0 + 1200, 2},
  };
  auto back = fault_frames_from_json(fault_frames_to_json(frames));
  CHECK(back == frames);

  fdx::test::TempDir tmp("frames");
  write_frames_json(tmp.file("frames.json"), frames);
  CHECK(read_frames_json(tmp.file("frames.json")) == frames);
  CHECK_THROWS_AS(fault_frames_from_json("{broken"), IoError);
}

TEST_CASE("dataset splits must be disjoint and round-trip through JSON") {
  DatasetSplit split;
  split.train_cases = {1, 2, 3};
  split.test_cases = {4, 5};
  split.train_units = {{"P1", "U1"}, {"P2", "U1"}};
  split.test_units = {{"P3", "U2"}};
  validate_split(split);

  fdx::test::TempDir tmp("split");
  write_split_json(tmp.file("split.json"), split);
  DatasetSplit back = read_split_json(tmp.file("split.json"));
  CHECK(back.train_cases == split.train_cases);
  CHECK(back.test_cases == split.test_cases);
  CHECK(back.train_units == split.train_units);
  CHECK(back.test_units == split.test_units);

  SUBCASE("shared case between train and test is rejected") {
    split.test_cases.push_back(2);
    CHECK_THROWS_AS(validate_split(split), ValidationError);
  }
  SUBCASE("shared unit between train and test is rejected") {
    split.test_units.push_back({"P1", "U1"});
    CHECK_THROWS_AS(validate_split(split), ValidationError);
  }
}

TEST_CASE("entity identifiers render as park/unit/component paths") {
  EntityId id{"ParkA", "T07", "FastShaftBearingDE"};
  CHECK(id.str() == "ParkA/T07/FastShaftBearingDE");
  CHECK(UnitId{"ParkA", "T07"}.str() == "ParkA/T07");
}
