#pragma once

#include <compare>
#include <string>
#include <vector>

#include "timegrid.hpp"

namespace fdx {

// Class codes are stable and serialized with every model.
enum class FaultClass : int { Normal = 0, Bearing = 1, Sensor = 2 };
constexpr int kNumClasses = 3;

int fault_class_code(FaultClass c);
FaultClass fault_class_from_code(int code);
std::string fault_class_name(FaultClass c);

enum class DetectorKind { Tuplet, Bbcv };

struct EntityId {
  std::string park;
  std::string unit;
  std::string component;

  auto operator<=>(const EntityId&) const = default;
  std::string str() const { return park + "/" + unit + "/" + component; }
};

struct UnitId {
  std::string park;
  std::string unit;

  auto operator<=>(const UnitId&) const = default;
  std::string str() const { return park + "/" + unit; }
};

// One detector score for one component at one timestamp. `feature`
// distinguishes the per-feature columns the bbcv detector emits; it stays
// empty for single-column detectors.
struct AnomalyRecord {
  Timestamp ts = 0;
  EntityId id;
  DetectorKind detector = DetectorKind::Tuplet;
  std::string feature;
  double score = 0.0;
  bool operating = true;

  bool operator==(const AnomalyRecord&) const = default;
};

// Labeled fault interval, start-inclusive, end-exclusive.
struct FaultFrame {
  EntityId id;
  FaultClass fault = FaultClass::Bearing;
  Timestamp start = 0;
  Timestamp end = 0;
  int case_no = 0;

  bool operator==(const FaultFrame&) const = default;
};

struct DatasetSplit {
  std::vector<int> train_cases;
  std::vector<int> test_cases;
  std::vector<UnitId> train_units;
  std::vector<UnitId> test_units;
};

// "tuplet", "bbcv", or "bbcv:<feature>".
std::string detector_column(DetectorKind kind, const std::string& feature);
void parse_detector_column(const std::string& s, DetectorKind& kind, std::string& feature);

// Sorts by (entity, start); rejects inverted intervals, Normal labels and
// per-entity overlaps, naming the offending case_no.
std::vector<FaultFrame> validate_fault_frames(std::vector<FaultFrame> frames);

// Train and test case/unit sets must be disjoint.
void validate_split(const DatasetSplit& split);

// CSV with header `ts,park,unit,component,detector,score,operating`.
std::string anomaly_records_to_csv(const std::vector<AnomalyRecord>& records);
std::vector<AnomalyRecord> anomaly_records_from_csv(const std::string& text);
void write_anomaly_csv(const std::string& path, const std::vector<AnomalyRecord>& records);
std::vector<AnomalyRecord> read_anomaly_csv(const std::string& path);

// JSON array of {park, unit, component, fault_type, start, end, case_no}.
std::string fault_frames_to_json(const std::vector<FaultFrame>& frames);
std::vector<FaultFrame> fault_frames_from_json(const std::string& text);
void write_frames_json(const std::string& path, const std::vector<FaultFrame>& frames);
std::vector<FaultFrame> read_frames_json(const std::string& path);

void write_split_json(const std::string& path, const DatasetSplit& split);
DatasetSplit read_split_json(const std::string& path);

}  // namespace fdx
