#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "domain.hpp"

namespace fdx {

enum class Fidelity { ScoreLevel, SignalLevel };

enum class InjectionKind { BearingTrend, SensorVariance, SensorLooseContact };
enum class RampShape { Linear, Exponential };

struct InjectionProfile {
  InjectionKind kind = InjectionKind::BearingTrend;
  double amplitude = 1.0;
  RampShape ramp_shape = RampShape::Linear;
  // Loose contact only, in 10-minute grid steps.
  int healthy_segment_steps = 288;
  int faulty_segment_steps = 288;
  double noise_sd = 0.0;
  // Tuple channel to corrupt; -1 picks the last channel.
  int channel = -1;
};

struct Injection {
  int case_no = 0;
  EntityId entity;
  Timestamp start = 0;
  Timestamp end = 0;
  InjectionProfile profile;
};

struct ComponentSpec {
  std::string component;
  DetectorKind detector = DetectorKind::Tuplet;
  int channels = 3;  // tuple components only
};

struct UnitSpec {
  std::string unit;
  std::vector<ComponentSpec> components;
};

struct ParkSpec {
  std::string park;
  std::vector<UnitSpec> units;
};

struct ScenarioSpec {
  std::string name;
  Fidelity fidelity = Fidelity::ScoreLevel;
  std::uint64_t seed = 0;
  Timestamp start = 0;
  Timestamp end = 0;
  std::vector<ParkSpec> parks;
  std::vector<Injection> injections;
  std::vector<int> train_cases;
  std::vector<int> test_cases;
  int snapshot_len = 1024;
  int snapshot_every_steps = 1;
};

// Parses and fully validates a scenario document. Injections must reference
// existing entities, fit the scenario range, and form valid fault frames.
ScenarioSpec parse_scenario(const std::string& json_text);
ScenarioSpec read_scenario(const std::string& path);

FaultClass injection_fault_class(InjectionKind kind);

// Ground truth: one frame per injection.
std::vector<FaultFrame> scenario_frames(const ScenarioSpec& spec);

// Case split plus the unit sets the cases induce.
DatasetSplit scenario_split(const ScenarioSpec& spec);

std::vector<std::pair<EntityId, ComponentSpec>> scenario_entities(const ScenarioSpec& spec);
std::vector<UnitId> scenario_units(const ScenarioSpec& spec);

}  // namespace fdx
