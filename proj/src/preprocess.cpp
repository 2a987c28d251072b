#include "preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "common.hpp"
#include "fsio.hpp"
#include "stats.hpp"
#include "text.hpp"
#include "timegrid.hpp"

namespace fdx {

std::vector<AnomalyRecord> filter_operating_mode(std::vector<AnomalyRecord> records) {
  std::erase_if(records, [](const AnomalyRecord& r) { return !r.operating; });
  return records;
}

WideTable group_records(const std::vector<AnomalyRecord>& records) {
  struct Gather {
    Timestamp lo = std::numeric_limits<Timestamp>::max();
    Timestamp hi = std::numeric_limits<Timestamp>::min();
    std::set<std::string> columns;
    // (column, ts) -> score
    std::map<std::pair<std::string, Timestamp>, double> cells;
  };
  std::map<EntityId, Gather> gathered;
  for (const AnomalyRecord& r : records) {
    if (!on_grid(r.ts)) {
      throw ValidationError("record for " + r.id.str() + " at " + format_timestamp(r.ts) +
                            " is off the 10-minute grid");
    }
    Gather& g = gathered[r.id];
    g.lo = std::min(g.lo, r.ts);
    g.hi = std::max(g.hi, r.ts);
    const std::string column = detector_column(r.detector, r.feature);
    g.columns.insert(column);
    if (!g.cells.emplace(std::make_pair(column, r.ts), r.score).second) {
      throw ValidationError("duplicate record for " + r.id.str() + " column " + column + " at " +
                            format_timestamp(r.ts));
    }
  }

  WideTable table;
  table.entities.reserve(gathered.size());
  for (auto& [id, g] : gathered) {
    SeriesTable series;
    series.id = id;
    series.ts = build_time_grid(g.lo, g.hi + kGridStepSeconds);
    series.columns.assign(g.columns.begin(), g.columns.end());
    series.values.assign(series.columns.size(),
                         std::vector<double>(series.ts.size(),
                                             std::numeric_limits<double>::quiet_NaN()));
    series.labels.assign(series.ts.size(), FaultClass::Normal);
    for (const auto& [key, score] : g.cells) {
      const auto col = std::lower_bound(series.columns.begin(), series.columns.end(), key.first) -
                       series.columns.begin();
      const auto idx = static_cast<std::size_t>((key.second - g.lo) / kGridStepSeconds);
      series.values[static_cast<std::size_t>(col)][idx] = score;
    }
    table.entities.push_back(std::move(series));
  }
  return table;
}

void assign_labels(WideTable& table, const std::vector<FaultFrame>& frames) {
  const std::vector<FaultFrame> checked = validate_fault_frames(frames);
  for (SeriesTable& series : table.entities) {
    for (const FaultFrame& frame : checked) {
      if (frame.id != series.id) continue;
      for (std::size_t i = 0; i < series.ts.size(); ++i) {
        if (series.ts[i] >= frame.start && series.ts[i] < frame.end) {
          series.labels[i] = frame.fault;
        }
      }
    }
  }
}

void forward_fill(std::vector<double>& values, int limit) {
  if (limit < 0) throw ValidationError("forward fill limit must be >= 0");
  double last = std::numeric_limits<double>::quiet_NaN();
  int age = 0;
  for (double& v : values) {
    if (!std::isnan(v)) {
      last = v;
      age = 0;
      continue;
    }
    ++age;
    v = (!std::isnan(last) && age <= limit) ? last : 0.0;
  }
}

void fill_table(WideTable& table, int limit) {
  for (SeriesTable& series : table.entities) {
    for (auto& column : series.values) forward_fill(column, limit);
  }
}

std::size_t select_max_variance_column(const std::vector<std::vector<double>>& columns) {
  if (columns.empty()) throw ValidationError("no columns to select from");
  std::size_t best = 0;
  double best_var = columns[0].empty() ? 0.0 : population_variance(columns[0]);
  for (std::size_t i = 1; i < columns.size(); ++i) {
    const double var = columns[i].empty() ? 0.0 : population_variance(columns[i]);
    if (var > best_var) {
      best = i;
      best_var = var;
    }
  }
  return best;
}

std::string select_bbcv_column(const WideTable& table, const std::vector<UnitId>* fit_units) {
  std::set<std::string> names;
  for (const SeriesTable& series : table.entities) {
    for (const std::string& column : series.columns) {
      if (starts_with(column, "bbcv")) names.insert(column);
    }
  }
  if (names.empty()) return "";

  std::set<UnitId> fit;
  if (fit_units != nullptr) fit.insert(fit_units->begin(), fit_units->end());

  const std::vector<std::string> candidates(names.begin(), names.end());
  std::vector<std::vector<double>> gathered(candidates.size());
  for (const SeriesTable& series : table.entities) {
    if (fit_units != nullptr && !fit.count(UnitId{series.id.park, series.id.unit})) continue;
    for (std::size_t c = 0; c < series.columns.size(); ++c) {
      const auto it = std::lower_bound(candidates.begin(), candidates.end(), series.columns[c]);
      if (it == candidates.end() || *it != series.columns[c]) continue;
      auto& sink = gathered[static_cast<std::size_t>(it - candidates.begin())];
      for (double v : series.values[c]) {
        if (std::isnan(v)) {
          throw ValidationError("column reduction needs a filled table");
        }
        sink.push_back(v);
      }
    }
  }
  return candidates[select_max_variance_column(gathered)];
}

BaseTable assemble_base_table(const WideTable& table, const std::string& bbcv_column) {
  BaseTable out;
  out.bbcv_column = bbcv_column;
  for (const SeriesTable& series : table.entities) {
    std::size_t bbcv_idx = series.columns.size();
    std::size_t tuplet_idx = series.columns.size();
    for (std::size_t c = 0; c < series.columns.size(); ++c) {
      if (series.columns[c] == bbcv_column && !bbcv_column.empty()) bbcv_idx = c;
      if (series.columns[c] == "tuplet") tuplet_idx = c;
    }
    for (std::size_t i = 0; i < series.ts.size(); ++i) {
      BaseRow row;
      row.id = series.id;
      row.ts = series.ts[i];
      row.bbcv_base = bbcv_idx < series.columns.size() ? series.values[bbcv_idx][i] : 0.0;
      row.tuplet_base = tuplet_idx < series.columns.size() ? series.values[tuplet_idx][i] : 0.0;
      if (std::isnan(row.bbcv_base) || std::isnan(row.tuplet_base)) {
        throw ValidationError("base table assembly needs a filled table");
      }
      row.label = series.labels[i];
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

PreprocessOutput preprocess_records(std::vector<AnomalyRecord> records,
                                    const std::vector<FaultFrame>& frames,
                                    const std::vector<UnitId>* fit_units, int fill_limit) {
  PreprocessOutput out;
  out.wide = group_records(filter_operating_mode(std::move(records)));
  assign_labels(out.wide, frames);
  fill_table(out.wide, fill_limit);
  out.base = assemble_base_table(out.wide, select_bbcv_column(out.wide, fit_units));
  return out;
}

namespace {
constexpr const char* kBaseHeader = "ts,park,unit,component,bbcv_base,tuplet_base,label";
}

std::string base_table_to_csv(const BaseTable& table) {
  std::string out = kBaseHeader;
  out.push_back('\n');
  for (const BaseRow& row : table.rows) {
    out += format_timestamp(row.ts);
    out.push_back(',');
    out += row.id.park;
    out.push_back(',');
    out += row.id.unit;
    out.push_back(',');
    out += row.id.component;
    out.push_back(',');
    out += format_double(row.bbcv_base);
    out.push_back(',');
    out += format_double(row.tuplet_base);
    out.push_back(',');
    out += format_int(fault_class_code(row.label));
    out.push_back('\n');
  }
  return out;
}

BaseTable base_table_from_csv(const std::string& text) {
  auto lines = split(text, '\n');
  if (lines.empty() || lines[0] != kBaseHeader) {
    throw IoError("base CSV: bad or missing header");
  }
  BaseTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split(lines[i], ',');
    if (f.size() != 7) {
      throw IoError("base CSV line " + std::to_string(i + 1) + ": expected 7 fields");
    }
    BaseRow row;
    try {
      row.ts = parse_timestamp(f[0]);
    } catch (const ValidationError& e) {
      throw IoError("base CSV line " + std::to_string(i + 1) + ": " + e.what());
    }
    row.id = EntityId{std::string(f[1]), std::string(f[2]), std::string(f[3])};
    auto bbcv = parse_double(f[4]);
    auto tuplet = parse_double(f[5]);
    auto label = parse_int(f[6]);
    if (!bbcv || !std::isfinite(*bbcv) || !tuplet || !std::isfinite(*tuplet) || !label) {
      throw IoError("base CSV line " + std::to_string(i + 1) + ": bad numeric field");
    }
    row.bbcv_base = *bbcv;
    row.tuplet_base = *tuplet;
    try {
      row.label = fault_class_from_code(static_cast<int>(*label));
    } catch (const ValidationError& e) {
      throw IoError("base CSV line " + std::to_string(i + 1) + ": " + e.what());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_base_csv(const std::string& path, const BaseTable& table) {
  write_file_atomic(path, base_table_to_csv(table));
}

BaseTable read_base_csv(const std::string& path) {
  return base_table_from_csv(read_text_file(path));
}

}  // namespace fdx
