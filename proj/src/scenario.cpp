#include "scenario.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <json.hpp>

#include "common.hpp"
#include "fsio.hpp"
#include "timegrid.hpp"

namespace fdx {
namespace {

using nlohmann::json;

const json& require_field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ValidationError("scenario: missing field '" + std::string(key) + "' in " + where);
  }
  return *it;
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const json& v = require_field(obj, key, where);
  if (!v.is_string()) {
    throw ValidationError("scenario: field '" + std::string(key) + "' in " + where +
                          " must be a string");
  }
  return v.get<std::string>();
}

double get_number(const json& obj, const char* key, double fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) {
    throw ValidationError("scenario: field '" + std::string(key) + "' must be a number");
  }
  return it->get<double>();
}

int get_int(const json& obj, const char* key, int fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number_integer()) {
    throw ValidationError("scenario: field '" + std::string(key) + "' must be an integer");
  }
  return it->get<int>();
}

InjectionKind parse_kind(const std::string& s) {
  if (s == "bearing_trend") return InjectionKind::BearingTrend;
  if (s == "sensor_variance") return InjectionKind::SensorVariance;
  if (s == "sensor_loose_contact") return InjectionKind::SensorLooseContact;
  throw ValidationError("scenario: unknown injection kind '" + s + "'");
}

RampShape parse_ramp(const std::string& s) {
  if (s == "linear") return RampShape::Linear;
  if (s == "exponential") return RampShape::Exponential;
  throw ValidationError("scenario: unknown ramp shape '" + s + "'");
}

DetectorKind parse_detector_name(const std::string& s) {
  if (s == "tuplet") return DetectorKind::Tuplet;
  if (s == "bbcv") return DetectorKind::Bbcv;
  throw ValidationError("scenario: detector must be 'tuplet' or 'bbcv', got '" + s + "'");
}

std::vector<int> parse_case_list(const json& arr, const char* key) {
  if (!arr.is_array()) {
    throw ValidationError("scenario: split field '" + std::string(key) + "' must be an array");
  }
  std::vector<int> out;
  for (const json& v : arr) {
    if (!v.is_number_integer()) {
      throw ValidationError("scenario: split case numbers must be integers");
    }
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

FaultClass injection_fault_class(InjectionKind kind) {
  return kind == InjectionKind::BearingTrend ? FaultClass::Bearing : FaultClass::Sensor;
}

ScenarioSpec parse_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("scenario: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("scenario: document root must be an object");

  ScenarioSpec spec;
  spec.name = get_string(doc, "name", "scenario");
  const std::string fidelity = get_string(doc, "fidelity", "scenario");
  if (fidelity == "score_level") {
    spec.fidelity = Fidelity::ScoreLevel;
  } else if (fidelity == "signal_level") {
    spec.fidelity = Fidelity::SignalLevel;
  } else {
    throw ValidationError("scenario: fidelity must be 'score_level' or 'signal_level'");
  }
  const json& seed = require_field(doc, "seed", "scenario");
  if (!seed.is_number_integer() || seed.get<std::int64_t>() < 0) {
    throw ValidationError("scenario: seed must be a non-negative integer");
  }
  spec.seed = seed.get<std::uint64_t>();
  spec.start = parse_timestamp(get_string(doc, "start", "scenario"));
  spec.end = parse_timestamp(get_string(doc, "end", "scenario"));
  if (spec.start >= spec.end) throw ValidationError("scenario: start must precede end");

  spec.snapshot_len = get_int(doc, "snapshot_len", 1024);
  if (spec.snapshot_len < 64 || (spec.snapshot_len & (spec.snapshot_len - 1)) != 0) {
    throw ValidationError("scenario: snapshot_len must be a power of two >= 64");
  }
  spec.snapshot_every_steps = get_int(doc, "snapshot_every_steps", 1);
  if (spec.snapshot_every_steps < 1) {
    throw ValidationError("scenario: snapshot_every_steps must be >= 1");
  }

  const json& parks = require_field(doc, "parks", "scenario");
  if (!parks.is_array() || parks.empty()) {
    throw ValidationError("scenario: parks must be a non-empty array");
  }
  std::set<std::string> park_names;
  for (const json& pj : parks) {
    ParkSpec park;
    park.park = get_string(pj, "park", "park entry");
    if (park.park.empty()) throw ValidationError("scenario: park name must not be empty");
    if (!park_names.insert(park.park).second) {
      throw ValidationError("scenario: duplicate park '" + park.park + "'");
    }
    const json& units = require_field(pj, "units", "park " + park.park);
    if (!units.is_array() || units.empty()) {
      throw ValidationError("scenario: park '" + park.park + "' must list units");
    }
    std::set<std::string> unit_names;
    for (const json& uj : units) {
      UnitSpec unit;
      unit.unit = get_string(uj, "unit", "unit entry of park " + park.park);
      if (unit.unit.empty()) throw ValidationError("scenario: unit name must not be empty");
      if (!unit_names.insert(unit.unit).second) {
        throw ValidationError("scenario: duplicate unit '" + unit.unit + "' in park " + park.park);
      }
      const std::string where = park.park + "/" + unit.unit;
      const json& comps = require_field(uj, "components", "unit " + where);
      if (!comps.is_array() || comps.empty()) {
        throw ValidationError("scenario: unit " + where + " must list components");
      }
      std::set<std::string> comp_names;
      for (const json& cj : comps) {
        ComponentSpec comp;
        comp.component = get_string(cj, "component", "component entry of " + where);
        if (comp.component.empty()) {
          throw ValidationError("scenario: component name must not be empty");
        }
        if (!comp_names.insert(comp.component).second) {
          throw ValidationError("scenario: duplicate component '" + comp.component + "' in " +
                                where);
        }
        const std::string det = get_string(cj, "detector", "component " + comp.component);
        comp.detector = parse_detector_name(det);
        comp.channels = get_int(cj, "channels", 3);
        if (comp.detector == DetectorKind::Tuplet && comp.channels < 2) {
          throw ValidationError("scenario: tuple component '" + comp.component +
                                "' needs at least 2 channels");
        }
        unit.components.push_back(std::move(comp));
      }
      park.units.push_back(std::move(unit));
    }
    spec.parks.push_back(std::move(park));
  }

  // Entity lookup for injection validation.
  std::map<EntityId, ComponentSpec> entities;
  for (const auto& [id, comp] : scenario_entities(spec)) entities.emplace(id, comp);

  std::set<int> case_numbers;
  if (auto it = doc.find("injections"); it != doc.end()) {
    if (!it->is_array()) throw ValidationError("scenario: injections must be an array");
    for (const json& ij : *it) {
      Injection inj;
      inj.case_no = get_int(ij, "case_no", 0);
      if (inj.case_no <= 0) {
        throw ValidationError("scenario: injections need a positive case_no");
      }
      if (!case_numbers.insert(inj.case_no).second) {
        throw ValidationError("scenario: duplicate case_no " + std::to_string(inj.case_no));
      }
      inj.entity.park = get_string(ij, "park", "injection");
      inj.entity.unit = get_string(ij, "unit", "injection");
      inj.entity.component = get_string(ij, "component", "injection");
      auto entity_it = entities.find(inj.entity);
      if (entity_it == entities.end()) {
        throw ValidationError("scenario: injection case " + std::to_string(inj.case_no) +
                              " targets unknown entity " + inj.entity.str());
      }
      inj.start = parse_timestamp(get_string(ij, "start", "injection"));
      inj.end = parse_timestamp(get_string(ij, "end", "injection"));
      if (inj.start < spec.start || inj.end > spec.end) {
        throw ValidationError("scenario: injection case " + std::to_string(inj.case_no) +
                              " lies outside the scenario range");
      }

      const json& pj = require_field(ij, "profile", "injection case " +
                                     std::to_string(inj.case_no));
      InjectionProfile& prof = inj.profile;
      prof.kind = parse_kind(get_string(pj, "kind", "injection profile"));
      prof.amplitude = get_number(pj, "amplitude", 1.0);
      if (!(prof.amplitude >= 0.0)) {
        throw ValidationError("scenario: injection amplitude must be >= 0");
      }
      if (auto rs = pj.find("ramp_shape"); rs != pj.end()) {
        prof.ramp_shape = parse_ramp(rs->get<std::string>());
      }
      prof.healthy_segment_steps = get_int(pj, "healthy_segment_steps", 288);
      prof.faulty_segment_steps = get_int(pj, "faulty_segment_steps", 288);
      if (prof.healthy_segment_steps < 1 || prof.faulty_segment_steps < 1) {
        throw ValidationError("scenario: loose-contact segment lengths must be >= 1 step");
      }
      prof.noise_sd = get_number(pj, "noise_sd", 0.0);
      if (!(prof.noise_sd >= 0.0)) {
        throw ValidationError("scenario: injection noise_sd must be >= 0");
      }
      prof.channel = get_int(pj, "channel", -1);

      const DetectorKind det = entity_it->second.detector;
      if (prof.kind == InjectionKind::BearingTrend && det != DetectorKind::Bbcv) {
        throw ValidationError("scenario: bearing_trend case " + std::to_string(inj.case_no) +
                              " must target a vibration component");
      }
      if (prof.kind != InjectionKind::BearingTrend && det != DetectorKind::Tuplet) {
        throw ValidationError("scenario: sensor fault case " + std::to_string(inj.case_no) +
                              " must target a tuple component");
      }
      if (det == DetectorKind::Tuplet && prof.channel >= entity_it->second.channels) {
        throw ValidationError("scenario: injection case " + std::to_string(inj.case_no) +
                              " names channel " + std::to_string(prof.channel) +
                              " but the tuple has " +
                              std::to_string(entity_it->second.channels) + " channels");
      }
      spec.injections.push_back(std::move(inj));
    }
  }

  // Frames double as the canonical overlap/grid validation.
  validate_fault_frames(scenario_frames(spec));

  if (auto it = doc.find("split"); it != doc.end()) {
    if (!it->is_object()) throw ValidationError("scenario: split must be an object");
    spec.train_cases = parse_case_list(require_field(*it, "train_cases", "split"), "train_cases");
    spec.test_cases = parse_case_list(require_field(*it, "test_cases", "split"), "test_cases");
    for (int c : spec.train_cases) {
      if (!case_numbers.count(c)) {
        throw ValidationError("scenario: split references unknown case " + std::to_string(c));
      }
    }
    for (int c : spec.test_cases) {
      if (!case_numbers.count(c)) {
        throw ValidationError("scenario: split references unknown case " + std::to_string(c));
      }
    }
    validate_split(scenario_split(spec));
  }
  return spec;
}

ScenarioSpec read_scenario(const std::string& path) {
  return parse_scenario(read_text_file(path));
}

std::vector<FaultFrame> scenario_frames(const ScenarioSpec& spec) {
  std::vector<FaultFrame> frames;
  frames.reserve(spec.injections.size());
  for (const Injection& inj : spec.injections) {
    FaultFrame frame;
    frame.id = inj.entity;
    frame.fault = injection_fault_class(inj.profile.kind);
    frame.start = inj.start;
    frame.end = inj.end;
    frame.case_no = inj.case_no;
    frames.push_back(std::move(frame));
  }
  std::sort(frames.begin(), frames.end(), [](const FaultFrame& a, const FaultFrame& b) {
    if (a.id != b.id) return a.id < b.id;
    return a.start < b.start;
  });
  return frames;
}

DatasetSplit scenario_split(const ScenarioSpec& spec) {
  DatasetSplit split;
  split.train_cases = spec.train_cases;
  split.test_cases = spec.test_cases;
  std::sort(split.train_cases.begin(), split.train_cases.end());
  std::sort(split.test_cases.begin(), split.test_cases.end());

  std::map<int, UnitId> case_unit;
  for (const Injection& inj : spec.injections) {
    case_unit[inj.case_no] = UnitId{inj.entity.park, inj.entity.unit};
  }
  std::set<UnitId> train_units;
  std::set<UnitId> test_units;
  for (int c : split.train_cases) train_units.insert(case_unit.at(c));
  for (int c : split.test_cases) test_units.insert(case_unit.at(c));
  split.train_units.assign(train_units.begin(), train_units.end());
  split.test_units.assign(test_units.begin(), test_units.end());
  return split;
}

std::vector<std::pair<EntityId, ComponentSpec>> scenario_entities(const ScenarioSpec& spec) {
  std::vector<std::pair<EntityId, ComponentSpec>> out;
  for (const ParkSpec& park : spec.parks) {
    for (const UnitSpec& unit : park.units) {
      for (const ComponentSpec& comp : unit.components) {
        out.emplace_back(EntityId{park.park, unit.unit, comp.component}, comp);
      }
    }
  }
  return out;
}

std::vector<UnitId> scenario_units(const ScenarioSpec& spec) {
  std::vector<UnitId> out;
  for (const ParkSpec& park : spec.parks) {
    for (const UnitSpec& unit : park.units) {
      out.push_back(UnitId{park.park, unit.unit});
    }
  }
  return out;
}

}  // namespace fdx
