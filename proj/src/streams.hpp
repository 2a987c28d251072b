#pragma once

#include <map>
#include <vector>

#include "domain.hpp"
#include "timegrid.hpp"

namespace fdx {

// Fixed-length vibration sample window captured at one instant.
struct VibrationSnapshot {
  Timestamp ts = 0;
  std::vector<double> samples;
};

// Aligned channels of semantically similar sensors (e.g. three phase
// temperatures) on the 10-minute grid.
struct TupleSeries {
  std::vector<Timestamp> ts;
  std::vector<std::vector<double>> channels;  // channels[c][i]
};

struct WindSeries {
  std::vector<Timestamp> ts;
  std::vector<double> speed;
};

struct EntityStreams {
  EntityId id;
  TupleSeries tuples;                        // empty channels when absent
  std::vector<VibrationSnapshot> snapshots;  // empty when absent

  bool has_tuples() const { return !tuples.channels.empty(); }
  bool has_vibration() const { return !snapshots.empty(); }
};

struct RawStreams {
  std::map<UnitId, WindSeries> wind;
  std::vector<EntityStreams> entities;

  const EntityStreams* find(const EntityId& id) const {
    for (const auto& e : entities) {
      if (e.id == id) return &e;
    }
    return nullptr;
  }
  EntityStreams* find(const EntityId& id) {
    return const_cast<EntityStreams*>(static_cast<const RawStreams*>(this)->find(id));
  }
};

}  // namespace fdx
