#include "domain.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "common.hpp"
#include "fsio.hpp"
#include "text.hpp"

namespace fdx {

int fault_class_code(FaultClass c) { return static_cast<int>(c); }

FaultClass fault_class_from_code(int code) {
  if (code < 0 || code >= kNumClasses) {
    throw ValidationError("unknown fault class code " + std::to_string(code));
  }
  return static_cast<FaultClass>(code);
}

std::string fault_class_name(FaultClass c) {
  switch (c) {
    case FaultClass::Normal: return "Normal";
    case FaultClass::Bearing: return "BearingFault";
    case FaultClass::Sensor: return "SensorFault";
  }
  return "?";
}

std::string detector_column(DetectorKind kind, const std::string& feature) {
  if (kind == DetectorKind::Tuplet) return "tuplet";
  return feature.empty() ? "bbcv" : "bbcv:" + feature;
}

void parse_detector_column(const std::string& s, DetectorKind& kind, std::string& feature) {
  if (s == "tuplet") {
    kind = DetectorKind::Tuplet;
    feature.clear();
    return;
  }
  if (s == "bbcv") {
    kind = DetectorKind::Bbcv;
    feature.clear();
    return;
  }
  if (starts_with(s, "bbcv:") && s.size() > 5) {
    kind = DetectorKind::Bbcv;
    feature = s.substr(5);
    return;
  }
  throw IoError("unknown detector '" + s + "'");
}

std::vector<FaultFrame> validate_fault_frames(std::vector<FaultFrame> frames) {
  for (const auto& f : frames) {
    if (f.id.park.empty() || f.id.unit.empty() || f.id.component.empty()) {
      throw ValidationError("fault frame case " + std::to_string(f.case_no) +
                            " has an empty entity field");
    }
    if (f.fault == FaultClass::Normal) {
      throw ValidationError("fault frame case " + std::to_string(f.case_no) +
                            " is labeled Normal");
    }
    if (f.start >= f.end) {
      throw ValidationError("fault frame case " + std::to_string(f.case_no) +
                            " has start >= end");
    }
    if (!on_grid(f.start) || !on_grid(f.end)) {
      throw ValidationError("fault frame case " + std::to_string(f.case_no) +
                            " is off the 10-minute grid");
    }
  }
  std::sort(frames.begin(), frames.end(), [](const FaultFrame& a, const FaultFrame& b) {
    if (a.id != b.id) return a.id < b.id;
    return a.start < b.start;
  });
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const auto& prev = frames[i - 1];
    const auto& cur = frames[i];
    if (prev.id == cur.id && cur.start < prev.end) {
      throw ValidationError("fault frames overlap for " + cur.id.str() + " (cases " +
                            std::to_string(prev.case_no) + " and " +
                            std::to_string(cur.case_no) + ")");
    }
  }
  return frames;
}

void validate_split(const DatasetSplit& split) {
  std::set<int> train(split.train_cases.begin(), split.train_cases.end());
  for (int c : split.test_cases) {
    if (train.count(c)) {
      throw ValidationError("case " + std::to_string(c) + " appears in both splits");
    }
  }
  std::set<UnitId> train_units(split.train_units.begin(), split.train_units.end());
  for (const auto& u : split.test_units) {
    if (train_units.count(u)) {
      throw ValidationError("unit " + u.str() + " appears in both splits");
    }
  }
}

std::string anomaly_records_to_csv(const std::vector<AnomalyRecord>& records) {
  std::string out = "ts,park,unit,component,detector,score,operating\n";
  for (const auto& r : records) {
    out += format_timestamp(r.ts);
    out.push_back(',');
    out += r.id.park;
    out.push_back(',');
    out += r.id.unit;
    out.push_back(',');
    out += r.id.component;
    out.push_back(',');
    out += detector_column(r.detector, r.feature);
    out.push_back(',');
    out += format_double(r.score);
    out.push_back(',');
    out += r.operating ? "true" : "false";
    out.push_back('\n');
  }
  return out;
}

namespace {

constexpr const char* kAnomalyHeader = "ts,park,unit,component,detector,score,operating";

std::vector<std::string_view> csv_lines(const std::string& text) {
  std::vector<std::string_view> lines;
  std::string_view sv(text);
  std::size_t pos = 0;
  while (pos < sv.size()) {
    std::size_t next = sv.find('\n', pos);
    if (next == std::string_view::npos) {
      lines.push_back(sv.substr(pos));
      break;
    }
    lines.push_back(sv.substr(pos, next - pos));
    pos = next + 1;
  }
  return lines;
}

}  // namespace

std::vector<AnomalyRecord> anomaly_records_from_csv(const std::string& text) {
  auto lines = csv_lines(text);
  if (lines.empty() || lines[0] != kAnomalyHeader) {
    throw IoError("anomaly CSV: bad or missing header");
  }
  std::vector<AnomalyRecord> out;
  out.reserve(lines.size());
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split(lines[i], ',');
    if (f.size() != 7) {
      throw IoError("anomaly CSV line " + std::to_string(i + 1) + ": expected 7 fields");
    }
    AnomalyRecord r;
    try {
      r.ts = parse_timestamp(f[0]);
    } catch (const ValidationError& e) {
      throw IoError("anomaly CSV line " + std::to_string(i + 1) + ": " + e.what());
    }
    r.id = EntityId{std::string(f[1]), std::string(f[2]), std::string(f[3])};
    parse_detector_column(std::string(f[4]), r.detector, r.feature);
    auto score = parse_double(f[5]);
    if (!score || !std::isfinite(*score) || *score < 0.0) {
      throw IoError("anomaly CSV line " + std::to_string(i + 1) + ": bad score");
    }
    r.score = *score;
    if (f[6] == "true") {
      r.operating = true;
    } else if (f[6] == "false") {
      r.operating = false;
    } else {
      throw IoError("anomaly CSV line " + std::to_string(i + 1) + ": bad operating flag");
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_anomaly_csv(const std::string& path, const std::vector<AnomalyRecord>& records) {
  write_file_atomic(path, anomaly_records_to_csv(records));
}

std::vector<AnomalyRecord> read_anomaly_csv(const std::string& path) {
  return anomaly_records_from_csv(read_text_file(path));
}

namespace {

std::string fault_type_string(FaultClass c) {
  return c == FaultClass::Bearing ? "bearing" : "sensor";
}

FaultClass fault_type_from_string(const std::string& s) {
  if (s == "bearing") return FaultClass::Bearing;
  if (s == "sensor") return FaultClass::Sensor;
  throw ValidationError("unknown fault_type '" + s + "'");
}

}  // namespace

std::string fault_frames_to_json(const std::vector<FaultFrame>& frames) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : frames) {
    arr.push_back({{"park", f.id.park},
                   {"unit", f.id.unit},
                   {"component", f.id.component},
                   {"fault_type", fault_type_string(f.fault)},
                   {"start", format_timestamp(f.start)},
                   {"end", format_timestamp(f.end)},
                   {"case_no", f.case_no}});
  }
  return arr.dump(2) + "\n";
}

std::vector<FaultFrame> fault_frames_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("fault frames JSON: ") + e.what());
  }
  if (!arr.is_array()) throw IoError("fault frames JSON: expected an array");
  std::vector<FaultFrame> out;
  for (const auto& j : arr) {
    FaultFrame f;
    try {
      f.id = EntityId{j.at("park").get<std::string>(), j.at("unit").get<std::string>(),
                      j.at("component").get<std::string>()};
      f.fault = fault_type_from_string(j.at("fault_type").get<std::string>());
      f.start = parse_timestamp(j.at("start").get<std::string>());
      f.end = parse_timestamp(j.at("end").get<std::string>());
      f.case_no = j.at("case_no").get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("fault frames JSON: ") + e.what());
    }
    out.push_back(std::move(f));
  }
  return out;
}

void write_frames_json(const std::string& path, const std::vector<FaultFrame>& frames) {
  write_file_atomic(path, fault_frames_to_json(frames));
}

std::vector<FaultFrame> read_frames_json(const std::string& path) {
  return fault_frames_from_json(read_text_file(path));
}

void write_split_json(const std::string& path, const DatasetSplit& split) {
  nlohmann::json units_tr = nlohmann::json::array();
  for (const auto& u : split.train_units) units_tr.push_back({{"park", u.park}, {"unit", u.unit}});
  nlohmann::json units_te = nlohmann::json::array();
  for (const auto& u : split.test_units) units_te.push_back({{"park", u.park}, {"unit", u.unit}});
  nlohmann::json j{{"train_cases", split.train_cases},
                   {"test_cases", split.test_cases},
                   {"train_units", units_tr},
                   {"test_units", units_te}};
  write_file_atomic(path, j.dump(2) + "\n");
}

DatasetSplit read_split_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("split JSON: " + std::string(e.what()));
  }
  DatasetSplit s;
  try {
    s.train_cases = j.at("train_cases").get<std::vector<int>>();
    s.test_cases = j.at("test_cases").get<std::vector<int>>();
    for (const auto& u : j.at("train_units")) {
      s.train_units.push_back({u.at("park").get<std::string>(), u.at("unit").get<std::string>()});
    }
    for (const auto& u : j.at("test_units")) {
      s.test_units.push_back({u.at("park").get<std::string>(), u.at("unit").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("split JSON: " + std::string(e.what()));
  }
  validate_split(s);
  return s;
}

}  // namespace fdx
