#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "domain.hpp"
#include "scenario.hpp"
#include "streams.hpp"

namespace fdx {

struct SimulationOutput {
  Fidelity fidelity = Fidelity::ScoreLevel;
  std::vector<AnomalyRecord> records;  // score_level fidelity
  RawStreams streams;                  // signal_level fidelity
  std::vector<FaultFrame> frames;
  DatasetSplit split;
};

// Deterministic for a fixed scenario: every stochastic stream is keyed by
// (seed, entity/case label), so the output is independent of thread count
// and generation order.
SimulationOutput generate_fleet(const ScenarioSpec& spec);

// Healthy per-record score distribution |N(0, sigma)| with sigma chosen so
// P(score > 1) equals 0.001.
double healthy_score_sigma();

// Overlays a fault on already-generated raw streams. [start, end) must lie
// within the stream's coverage; a zero-length interval is a no-op. Draws
// come from the injection's own substream, so an amplitude of zero leaves
// the streams byte-identical.
void inject_bearing_fault(RawStreams& streams, const EntityId& entity, Timestamp start,
                          Timestamp end, const InjectionProfile& profile, std::uint64_t seed,
                          int case_no);
void inject_sensor_fault(RawStreams& streams, const EntityId& entity, Timestamp start,
                         Timestamp end, const InjectionProfile& profile, std::uint64_t seed,
                         int case_no);

// On-disk layout: wind.csv, tuples.csv, vibration.bin (f32 samples behind a
// per-record "FDXVIB1" magic).
void write_raw_streams(const std::string& dir, const RawStreams& streams);
RawStreams read_raw_streams(const std::string& dir);

}  // namespace fdx
