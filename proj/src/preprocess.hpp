#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "domain.hpp"

namespace fdx {

// One entity's score columns on its own contiguous 10-minute grid.
// NaN marks a missing observation until fill_table runs.
struct SeriesTable {
  EntityId id;
  std::vector<Timestamp> ts;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // values[col][i]
  std::vector<FaultClass> labels;
};

struct WideTable {
  std::vector<SeriesTable> entities;
};

// Keeps only rows captured in operating mode.
std::vector<AnomalyRecord> filter_operating_mode(std::vector<AnomalyRecord> records);

// Pivots records to per-entity grids spanning each entity's observed range.
// Column names are sorted; duplicate (entity, column, ts) keys are an error.
WideTable group_records(const std::vector<AnomalyRecord>& records);

// Labels each grid row from the covering fault frame, Normal elsewhere.
void assign_labels(WideTable& table, const std::vector<FaultFrame>& frames);

// Carries the last observation forward for at most `limit` steps; missing
// values beyond that (and before the first observation) become 0.0.
// Idempotent: a filled series passes through unchanged.
void forward_fill(std::vector<double>& values, int limit);
void fill_table(WideTable& table, int limit);

// Index of the column with the largest population variance; exact ties pick
// the lowest index.
std::size_t select_max_variance_column(const std::vector<std::vector<double>>& columns);

// The single high-variance score column kept from the multi-column
// vibration detector. Candidates are the union of its columns, sorted by
// name; variances are fitted on filled values of `fit_units` entities only
// (all units when null). Empty string when no such columns exist.
std::string select_bbcv_column(const WideTable& table, const std::vector<UnitId>* fit_units);

struct BaseRow {
  EntityId id;
  Timestamp ts = 0;
  double bbcv_base = 0.0;
  double tuplet_base = 0.0;
  FaultClass label = FaultClass::Normal;
};

struct BaseTable {
  std::string bbcv_column;  // provenance: the column kept by the reduction
  std::vector<BaseRow> rows;
};

// One row per entity grid point; a detector the entity lacks contributes 0.0.
// Requires a filled table (no NaN).
BaseTable assemble_base_table(const WideTable& table, const std::string& bbcv_column);

struct PreprocessOutput {
  WideTable wide;
  BaseTable base;
};

// filter -> pivot -> label -> fill -> reduce -> assemble.
PreprocessOutput preprocess_records(std::vector<AnomalyRecord> records,
                                    const std::vector<FaultFrame>& frames,
                                    const std::vector<UnitId>* fit_units, int fill_limit);

// CSV with header `ts,park,unit,component,bbcv_base,tuplet_base,label`
// (label as class code).
std::string base_table_to_csv(const BaseTable& table);
BaseTable base_table_from_csv(const std::string& text);
void write_base_csv(const std::string& path, const BaseTable& table);
BaseTable read_base_csv(const std::string& path);

}  // namespace fdx
