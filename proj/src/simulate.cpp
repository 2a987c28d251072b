#include "simulate.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <map>
#include <numbers>

#include "common.hpp"
#include "fsio.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "text.hpp"
#include "timegrid.hpp"

namespace fdx {
namespace {

constexpr double kOutageStartProb = 0.001;
constexpr double kWindMean = 8.0;
constexpr double kWindSd = 2.5;
constexpr double kWindAr = 0.97;
constexpr double kTupleBase = 60.0;
constexpr double kTupleDailyAmp = 8.0;
constexpr double kTupleSharedNoise = 0.5;
constexpr double kTupleChannelNoise = 0.3;
constexpr double kVibToneAmp = 0.8;
constexpr int kVibToneBin = 12;
constexpr int kImpulsePeriod = 48;
constexpr int kImpulseRing = 16;
constexpr double kImpulseDecay = 0.85;

double ramp_shape_value(RampShape shape, double u) {
  if (shape == RampShape::Linear) return u;
  return std::expm1(3.0 * u) / std::expm1(3.0);
}

// Position of step i inside an injection of len steps, spanning [0, 1].
double ramp_fraction(std::size_t i, std::size_t len) {
  if (len <= 1) return 1.0;
  return static_cast<double>(i) / static_cast<double>(len - 1);
}

std::vector<bool> simulate_operating(const ScenarioSpec& spec, const UnitId& unit,
                                     std::size_t n_steps) {
  Rng rng = Rng::substream(spec.seed, "operating:" + unit.str());
  std::vector<bool> operating(n_steps, true);
  std::size_t outage_left = 0;
  for (std::size_t i = 0; i < n_steps; ++i) {
    if (outage_left > 0) {
      operating[i] = false;
      --outage_left;
      continue;
    }
    if (rng.uniform() < kOutageStartProb) {
      // 1 h to 8 h of standstill.
      outage_left = 6 + rng.below(43);
      operating[i] = false;
      if (outage_left > 0) --outage_left;
    }
  }
  return operating;
}

const Injection* next_injection(const std::vector<const Injection*>& sorted, std::size_t& pos,
                                Timestamp ts) {
  while (pos < sorted.size() && sorted[pos]->end <= ts) ++pos;
  if (pos < sorted.size() && sorted[pos]->start <= ts) return sorted[pos];
  return nullptr;
}

// Injections that target one entity, ordered by start (they never overlap).
std::vector<const Injection*> entity_injections(const ScenarioSpec& spec, const EntityId& id) {
  std::vector<const Injection*> out;
  for (const Injection& inj : spec.injections) {
    if (inj.entity == id) out.push_back(&inj);
  }
  std::sort(out.begin(), out.end(),
            [](const Injection* a, const Injection* b) { return a->start < b->start; });
  return out;
}

std::vector<AnomalyRecord> score_level_entity(const ScenarioSpec& spec, const EntityId& id,
                                              const ComponentSpec& comp,
                                              const std::vector<Timestamp>& grid,
                                              const std::vector<bool>& operating) {
  const double sigma = healthy_score_sigma();
  Rng rng = Rng::substream(spec.seed, "score:" + id.str());
  std::vector<double> scores(grid.size());
  for (double& s : scores) s = sigma * std::fabs(rng.gaussian());

  for (const Injection* inj : entity_injections(spec, id)) {
    Rng irng = Rng::substream(spec.seed, "inject:case:" + std::to_string(inj->case_no));
    const std::size_t first = static_cast<std::size_t>((inj->start - spec.start) / kGridStepSeconds);
    const std::size_t len = static_cast<std::size_t>((inj->end - inj->start) / kGridStepSeconds);
    const InjectionProfile& prof = inj->profile;
    for (std::size_t k = 0; k < len; ++k) {
      double additive = 0.0;
      switch (prof.kind) {
        case InjectionKind::BearingTrend: {
          const double ramp = prof.amplitude * ramp_shape_value(prof.ramp_shape,
                                                                ramp_fraction(k, len));
          additive = ramp * (1.0 + prof.noise_sd * irng.gaussian());
          break;
        }
        case InjectionKind::SensorVariance:
          additive = prof.amplitude * std::fabs(irng.gaussian());
          break;
        case InjectionKind::SensorLooseContact: {
          const std::size_t period = static_cast<std::size_t>(prof.faulty_segment_steps) +
                                     static_cast<std::size_t>(prof.healthy_segment_steps);
          if (k % period < static_cast<std::size_t>(prof.faulty_segment_steps)) {
            additive = prof.amplitude * std::fabs(irng.gaussian());
          }
          break;
        }
      }
      scores[first + k] = std::max(0.0, scores[first + k] + additive);
    }
  }

  std::vector<AnomalyRecord> out;
  out.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    AnomalyRecord r;
    r.ts = grid[i];
    r.id = id;
    r.detector = comp.detector;
    r.score = scores[i];
    r.operating = operating[i];
    out.push_back(std::move(r));
  }
  return out;
}

WindSeries simulate_wind(const ScenarioSpec& spec, const UnitId& unit,
                         const std::vector<Timestamp>& grid) {
  Rng rng = Rng::substream(spec.seed, "wind:" + unit.str());
  WindSeries series;
  series.ts = grid;
  series.speed.resize(grid.size());
  double state = rng.gaussian();
  const double blend = std::sqrt(1.0 - kWindAr * kWindAr);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0) state = kWindAr * state + blend * rng.gaussian();
    series.speed[i] = std::clamp(kWindMean + kWindSd * state, 0.2, 25.0);
  }
  return series;
}

TupleSeries simulate_tuple(const ScenarioSpec& spec, const EntityId& id, int channels,
                           const std::vector<Timestamp>& grid) {
  Rng rng = Rng::substream(spec.seed, "tuple:" + id.str());
  TupleSeries series;
  series.ts = grid;
  series.channels.assign(static_cast<std::size_t>(channels),
                         std::vector<double>(grid.size(), 0.0));
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double day_pos = static_cast<double>(grid[i] % 86400) / 86400.0;
    const double shared = kTupleBase + kTupleDailyAmp * std::sin(kTwoPi * day_pos) +
                          kTupleSharedNoise * rng.gaussian();
    for (int c = 0; c < channels; ++c) {
      series.channels[static_cast<std::size_t>(c)][i] =
          shared + 0.2 * c + kTupleChannelNoise * rng.gaussian();
    }
  }
  return series;
}

std::vector<VibrationSnapshot> simulate_vibration(const ScenarioSpec& spec, const EntityId& id,
                                                  const std::vector<Timestamp>& grid) {
  Rng rng = Rng::substream(spec.seed, "vib:" + id.str());
  std::vector<VibrationSnapshot> snaps;
  const std::size_t n = static_cast<std::size_t>(spec.snapshot_len);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < grid.size();
       i += static_cast<std::size_t>(spec.snapshot_every_steps)) {
    VibrationSnapshot snap;
    snap.ts = grid[i];
    snap.samples.resize(n);
    const double phase = rng.uniform(0.0, kTwoPi);
    for (std::size_t k = 0; k < n; ++k) {
      const double tone =
          kVibToneAmp * std::sin(kTwoPi * kVibToneBin * static_cast<double>(k) /
                                     static_cast<double>(n) +
                                 phase);
      snap.samples[k] = rng.gaussian() + tone;
    }
    snaps.push_back(std::move(snap));
  }
  return snaps;
}

void apply_signal_injections(const ScenarioSpec& spec, RawStreams& streams) {
  // Case order, so each injection's substream draws are reproducible.
  std::vector<const Injection*> order;
  for (const Injection& inj : spec.injections) order.push_back(&inj);
  std::sort(order.begin(), order.end(),
            [](const Injection* a, const Injection* b) { return a->case_no < b->case_no; });
  for (const Injection* inj : order) {
    if (inj->profile.kind == InjectionKind::BearingTrend) {
      inject_bearing_fault(streams, inj->entity, inj->start, inj->end, inj->profile, spec.seed,
                           inj->case_no);
    } else {
      inject_sensor_fault(streams, inj->entity, inj->start, inj->end, inj->profile, spec.seed,
                          inj->case_no);
    }
  }
}

void append_le(std::string& out, const void* data, std::size_t size) {
  static_assert(std::endian::native == std::endian::little,
                "vibration binary assumes a little-endian host");
  out.append(static_cast<const char*>(data), size);
}

void append_u16(std::string& out, std::uint16_t v) { append_le(out, &v, sizeof v); }
void append_u32(std::string& out, std::uint32_t v) { append_le(out, &v, sizeof v); }
void append_i64(std::string& out, std::int64_t v) { append_le(out, &v, sizeof v); }
void append_f32(std::string& out, float v) { append_le(out, &v, sizeof v); }

void append_str16(std::string& out, const std::string& s) {
  if (s.size() > 0xFFFF) throw ValidationError("vibration binary: name too long");
  append_u16(out, static_cast<std::uint16_t>(s.size()));
  out.append(s);
}

constexpr const char kVibMagic[] = "FDXVIB1";
constexpr std::size_t kVibMagicLen = 7;

class BinReader {
 public:
  explicit BinReader(const std::string& data) : data_(data) {}

  bool at_end() const { return pos_ >= data_.size(); }

  void expect_magic() {
    if (pos_ + kVibMagicLen > data_.size() ||
        std::memcmp(data_.data() + pos_, kVibMagic, kVibMagicLen) != 0) {
      throw IoError("vibration binary: bad record magic");
    }
    pos_ += kVibMagicLen;
  }

  std::uint16_t read_u16() { return read_pod<std::uint16_t>(); }
  std::uint32_t read_u32() { return read_pod<std::uint32_t>(); }
  std::int64_t read_i64() { return read_pod<std::int64_t>(); }
  float read_f32() { return read_pod<float>(); }

  std::string read_str16() {
    const std::uint16_t len = read_u16();
    if (pos_ + len > data_.size()) throw IoError("vibration binary: truncated string");
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

 private:
  template <typename T>
  T read_pod() {
    if (pos_ + sizeof(T) > data_.size()) throw IoError("vibration binary: truncated record");
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  const std::string& data_;
  std::size_t pos_ = 0;
};

struct StreamRange {
  Timestamp lo = 0;
  Timestamp hi = 0;  // exclusive
};

StreamRange snapshot_range(const std::vector<VibrationSnapshot>& snaps) {
  StreamRange r;
  r.lo = snaps.front().ts;
  r.hi = snaps.back().ts + kGridStepSeconds;
  return r;
}

}  // namespace

double healthy_score_sigma() {
  static const double sigma = 1.0 / normal_quantile(0.9995);
  return sigma;
}

SimulationOutput generate_fleet(const ScenarioSpec& spec) {
  SimulationOutput out;
  out.fidelity = spec.fidelity;
  out.frames = scenario_frames(spec);
  out.split = scenario_split(spec);

  const std::vector<Timestamp> grid = build_time_grid(spec.start, spec.end);
  const auto entities = scenario_entities(spec);

  if (spec.fidelity == Fidelity::ScoreLevel) {
    std::map<UnitId, std::vector<bool>> operating;
    for (const UnitId& unit : scenario_units(spec)) {
      operating[unit] = simulate_operating(spec, unit, grid.size());
    }
    std::vector<std::vector<AnomalyRecord>> slots(entities.size());
    parallel_for(entities.size(), [&](std::size_t i) {
      const auto& [id, comp] = entities[i];
      slots[i] = score_level_entity(spec, id, comp, grid, operating.at(UnitId{id.park, id.unit}));
    });
    std::size_t total = 0;
    for (const auto& s : slots) total += s.size();
    out.records.reserve(total);
    for (auto& s : slots) {
      out.records.insert(out.records.end(), std::make_move_iterator(s.begin()),
                         std::make_move_iterator(s.end()));
    }
    return out;
  }

  for (const UnitId& unit : scenario_units(spec)) {
    out.streams.wind.emplace(unit, simulate_wind(spec, unit, grid));
  }
  out.streams.entities.resize(entities.size());
  parallel_for(entities.size(), [&](std::size_t i) {
    const auto& [id, comp] = entities[i];
    EntityStreams& es = out.streams.entities[i];
    es.id = id;
    if (comp.detector == DetectorKind::Tuplet) {
      es.tuples = simulate_tuple(spec, id, comp.channels, grid);
    } else {
      es.snapshots = simulate_vibration(spec, id, grid);
    }
  });
  apply_signal_injections(spec, out.streams);
  return out;
}

void inject_bearing_fault(RawStreams& streams, const EntityId& entity, Timestamp start,
                          Timestamp end, const InjectionProfile& profile, std::uint64_t seed,
                          int case_no) {
  if (start > end) throw ValidationError("injection interval has start > end");
  if (start == end) return;
  EntityStreams* es = streams.find(entity);
  if (es == nullptr || !es->has_vibration()) {
    throw ValidationError("no vibration stream for " + entity.str());
  }
  const StreamRange range = snapshot_range(es->snapshots);
  if (start < range.lo || end > range.hi) {
    throw ValidationError("injection interval lies outside the vibration stream for " +
                          entity.str());
  }

  Rng rng = Rng::substream(seed, "inject:case:" + std::to_string(case_no));
  const double span = static_cast<double>(end - start);
  for (VibrationSnapshot& snap : es->snapshots) {
    if (snap.ts < start || snap.ts >= end) continue;
    const double u = static_cast<double>(snap.ts - start) / span;
    const double level = profile.amplitude * ramp_shape_value(profile.ramp_shape, u);
    const std::size_t n = snap.samples.size();
    std::size_t pos = rng.below(kImpulsePeriod);
    while (pos < n) {
      // One impact: a spike followed by a short exponential ring-down.
      const double amp = level * (1.0 + 0.2 * rng.gaussian());
      double decay = 1.0;
      for (std::size_t d = 0; d < kImpulseRing && pos + d < n; ++d) {
        snap.samples[pos + d] += amp * decay;
        decay *= kImpulseDecay;
      }
      pos += kImpulsePeriod;
    }
  }
}

void inject_sensor_fault(RawStreams& streams, const EntityId& entity, Timestamp start,
                         Timestamp end, const InjectionProfile& profile, std::uint64_t seed,
                         int case_no) {
  if (start > end) throw ValidationError("injection interval has start > end");
  if (start == end) return;
  EntityStreams* es = streams.find(entity);
  if (es == nullptr || !es->has_tuples()) {
    throw ValidationError("no tuple stream for " + entity.str());
  }
  TupleSeries& tuples = es->tuples;
  if (tuples.ts.empty()) throw ValidationError("empty tuple stream for " + entity.str());
  if (start < tuples.ts.front() || end > tuples.ts.back() + kGridStepSeconds) {
    throw ValidationError("injection interval lies outside the tuple stream for " + entity.str());
  }
  const std::size_t k = tuples.channels.size();
  const std::size_t channel =
      profile.channel < 0 ? k - 1 : static_cast<std::size_t>(profile.channel);
  if (channel >= k) throw ValidationError("injection channel out of range for " + entity.str());

  Rng rng = Rng::substream(seed, "inject:case:" + std::to_string(case_no));
  const auto begin_it = std::lower_bound(tuples.ts.begin(), tuples.ts.end(), start);
  for (auto it = begin_it; it != tuples.ts.end() && *it < end; ++it) {
    const std::size_t i = static_cast<std::size_t>(it - tuples.ts.begin());
    const std::size_t step = static_cast<std::size_t>((*it - start) / kGridStepSeconds);
    bool corrupt = true;
    if (profile.kind == InjectionKind::SensorLooseContact) {
      const std::size_t period = static_cast<std::size_t>(profile.faulty_segment_steps) +
                                 static_cast<std::size_t>(profile.healthy_segment_steps);
      corrupt = step % period < static_cast<std::size_t>(profile.faulty_segment_steps);
    }
    if (!corrupt) continue;
    tuples.channels[channel][i] += profile.amplitude * (1.0 + profile.noise_sd * rng.gaussian());
  }
}

void write_raw_streams(const std::string& dir, const RawStreams& streams) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::string wind = "ts,park,unit,speed\n";
  for (const auto& [unit, series] : streams.wind) {
    for (std::size_t i = 0; i < series.ts.size(); ++i) {
      wind += format_timestamp(series.ts[i]);
      wind.push_back(',');
      wind += unit.park;
      wind.push_back(',');
      wind += unit.unit;
      wind.push_back(',');
      wind += format_double(series.speed[i]);
      wind.push_back('\n');
    }
  }
  write_file_atomic((fs::path(dir) / "wind.csv").string(), wind);

  std::string tuples = "ts,park,unit,component,channel,value\n";
  for (const EntityStreams& es : streams.entities) {
    if (!es.has_tuples()) continue;
    for (std::size_t i = 0; i < es.tuples.ts.size(); ++i) {
      for (std::size_t c = 0; c < es.tuples.channels.size(); ++c) {
        tuples += format_timestamp(es.tuples.ts[i]);
        tuples.push_back(',');
        tuples += es.id.park;
        tuples.push_back(',');
        tuples += es.id.unit;
        tuples.push_back(',');
        tuples += es.id.component;
        tuples.push_back(',');
        tuples += format_int(static_cast<std::int64_t>(c));
        tuples.push_back(',');
        tuples += format_double(es.tuples.channels[c][i]);
        tuples.push_back('\n');
      }
    }
  }
  write_file_atomic((fs::path(dir) / "tuples.csv").string(), tuples);

  std::string vib;
  for (const EntityStreams& es : streams.entities) {
    for (const VibrationSnapshot& snap : es.snapshots) {
      vib.append(kVibMagic, kVibMagicLen);
      append_str16(vib, es.id.park);
      append_str16(vib, es.id.unit);
      append_str16(vib, es.id.component);
      append_i64(vib, snap.ts);
      append_u32(vib, static_cast<std::uint32_t>(snap.samples.size()));
      for (double s : snap.samples) append_f32(vib, static_cast<float>(s));
    }
  }
  write_file_atomic((fs::path(dir) / "vibration.bin").string(), vib);
}

RawStreams read_raw_streams(const std::string& dir) {
  namespace fs = std::filesystem;
  RawStreams streams;

  const std::string wind_text = read_text_file((fs::path(dir) / "wind.csv").string());
  {
    auto lines = split(wind_text, '\n');
    if (lines.empty() || lines[0] != "ts,park,unit,speed") {
      throw IoError("wind CSV: bad or missing header");
    }
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto f = split(lines[i], ',');
      if (f.size() != 4) throw IoError("wind CSV line " + std::to_string(i + 1) + ": bad row");
      Timestamp ts;
      try {
        ts = parse_timestamp(f[0]);
      } catch (const ValidationError& e) {
        throw IoError("wind CSV line " + std::to_string(i + 1) + ": " + e.what());
      }
      auto speed = parse_double(f[3]);
      if (!speed || !std::isfinite(*speed)) {
        throw IoError("wind CSV line " + std::to_string(i + 1) + ": bad speed");
      }
      WindSeries& series = streams.wind[UnitId{std::string(f[1]), std::string(f[2])}];
      if (!series.ts.empty() && ts <= series.ts.back()) {
        throw IoError("wind CSV line " + std::to_string(i + 1) + ": timestamps not increasing");
      }
      series.ts.push_back(ts);
      series.speed.push_back(*speed);
    }
  }

  std::map<EntityId, std::size_t> index;
  auto entity_slot = [&](const EntityId& id) -> EntityStreams& {
    auto [it, inserted] = index.emplace(id, streams.entities.size());
    if (inserted) {
      streams.entities.emplace_back();
      streams.entities.back().id = id;
    }
    return streams.entities[it->second];
  };

  const fs::path tuples_path = fs::path(dir) / "tuples.csv";
  if (fs::exists(tuples_path)) {
    const std::string text = read_text_file(tuples_path.string());
    auto lines = split(text, '\n');
    if (lines.empty() || lines[0] != "ts,park,unit,component,channel,value") {
      throw IoError("tuples CSV: bad or missing header");
    }
    // ts -> per-channel values, gathered first because rows may interleave.
    std::map<EntityId, std::map<Timestamp, std::map<std::size_t, double>>> gathered;
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      auto f = split(lines[i], ',');
      if (f.size() != 6) throw IoError("tuples CSV line " + std::to_string(i + 1) + ": bad row");
      Timestamp ts;
      try {
        ts = parse_timestamp(f[0]);
      } catch (const ValidationError& e) {
        throw IoError("tuples CSV line " + std::to_string(i + 1) + ": " + e.what());
      }
      auto channel = parse_int(f[4]);
      auto value = parse_double(f[5]);
      if (!channel || *channel < 0 || !value || !std::isfinite(*value)) {
        throw IoError("tuples CSV line " + std::to_string(i + 1) + ": bad channel or value");
      }
      EntityId id{std::string(f[1]), std::string(f[2]), std::string(f[3])};
      auto [it, inserted] = gathered[id][ts].emplace(static_cast<std::size_t>(*channel), *value);
      if (!inserted) {
        throw IoError("tuples CSV line " + std::to_string(i + 1) + ": duplicate channel sample");
      }
    }
    for (auto& [id, by_ts] : gathered) {
      EntityStreams& es = entity_slot(id);
      std::size_t channels = 0;
      for (const auto& [ts, ch] : by_ts) channels = std::max(channels, ch.rbegin()->first + 1);
      es.tuples.channels.assign(channels, {});
      for (auto& [ts, ch] : by_ts) {
        if (ch.size() != channels) {
          throw IoError("tuples CSV: ragged channels for " + id.str() + " at " +
                        format_timestamp(ts));
        }
        es.tuples.ts.push_back(ts);
        for (auto& [c, v] : ch) es.tuples.channels[c].push_back(v);
      }
    }
  }

  const fs::path vib_path = fs::path(dir) / "vibration.bin";
  if (fs::exists(vib_path)) {
    const std::string blob = read_text_file(vib_path.string());
    BinReader reader(blob);
    while (!reader.at_end()) {
      reader.expect_magic();
      EntityId id;
      id.park = reader.read_str16();
      id.unit = reader.read_str16();
      id.component = reader.read_str16();
      VibrationSnapshot snap;
      snap.ts = reader.read_i64();
      const std::uint32_t len = reader.read_u32();
      snap.samples.resize(len);
      for (std::uint32_t i = 0; i < len; ++i) {
        snap.samples[i] = static_cast<double>(reader.read_f32());
      }
      entity_slot(id).snapshots.push_back(std::move(snap));
    }
    for (EntityStreams& es : streams.entities) {
      std::sort(es.snapshots.begin(), es.snapshots.end(),
                [](const VibrationSnapshot& a, const VibrationSnapshot& b) { return a.ts < b.ts; });
    }
  }
  return streams;
}

}  // namespace fdx
