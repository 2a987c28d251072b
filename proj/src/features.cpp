#include "features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "common.hpp"
#include "fsio.hpp"
#include "mann_kendall.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "text.hpp"
#include "timegrid.hpp"

namespace fdx {

int trend_certainty(double p_pos, double threshold) { return p_pos < threshold ? 1 : 0; }

WindowStats window_stats(std::span<const double> window, double threshold) {
  if (window.empty()) throw ValidationError("window stats need a non-empty window");
  const bool any_anomalous = std::any_of(window.begin(), window.end(),
                                         [](double v) { return v >= 1.0; });
  if (!any_anomalous) return {0, 0.0};
  WindowStats out;
  out.tc = trend_certainty(mann_kendall(window).p_pos, threshold);
  out.var = population_variance(window);
  return out;
}

namespace {

void check_window_args(std::size_t window, std::size_t stride) {
  if (window < 4) throw ValidationError("feature window must cover at least 4 rows");
  if (stride < 1) throw ValidationError("feature stride must be >= 1");
}

// Window-end row indices for a series of n rows.
std::vector<std::size_t> window_ends(std::size_t n, std::size_t window, std::size_t stride) {
  std::vector<std::size_t> ends;
  if (n < window) return ends;
  for (std::size_t end = window - 1; end < n; end += stride) ends.push_back(end);
  return ends;
}

}  // namespace

FeatureTable build_feature_rows(const BaseTable& base, std::size_t window, std::size_t stride) {
  check_window_args(window, stride);

  // Rows arrive sorted per entity; group contiguous runs by entity.
  struct Group {
    const EntityId* id;
    std::size_t begin, end;
  };
  std::vector<Group> groups;
  std::size_t i = 0;
  while (i < base.rows.size()) {
    std::size_t j = i;
    while (j < base.rows.size() && base.rows[j].id == base.rows[i].id) ++j;
    groups.push_back({&base.rows[i].id, i, j});
    i = j;
  }

  std::vector<FeatureTable> slots(groups.size());
  parallel_for(groups.size(), [&](std::size_t g) {
    const Group& group = groups[g];
    const std::size_t n = group.end - group.begin;
    std::vector<double> bbcv(n), tuplet(n);
    for (std::size_t k = 0; k < n; ++k) {
      const BaseRow& row = base.rows[group.begin + k];
      if (k > 0 && row.ts != base.rows[group.begin + k - 1].ts + kGridStepSeconds) {
        throw ValidationError("feature rows for " + row.id.str() +
                              " are not contiguous on the grid");
      }
      bbcv[k] = row.bbcv_base;
      tuplet[k] = row.tuplet_base;
    }
    for (std::size_t end : window_ends(n, window, stride)) {
      const std::size_t start = end + 1 - window;
      const BaseRow& last = base.rows[group.begin + end];
      const WindowStats bs = window_stats(std::span(bbcv).subspan(start, window));
      const WindowStats ts = window_stats(std::span(tuplet).subspan(start, window));
      FeatureRow row;
      row.id = last.id;
      row.ts = last.ts;
      row.label = last.label;
      row.x = {last.bbcv_base, last.tuplet_base, static_cast<double>(bs.tc), bs.var,
               static_cast<double>(ts.tc), ts.var};
      slots[g].rows.push_back(std::move(row));
    }
  });

  FeatureTable out;
  for (auto& slot : slots) {
    out.rows.insert(out.rows.end(), std::make_move_iterator(slot.rows.begin()),
                    std::make_move_iterator(slot.rows.end()));
  }
  return out;
}

CandidateTable build_candidate_table(const WideTable& wide, std::size_t window,
                                     std::size_t stride, double threshold) {
  check_window_args(window, stride);

  CandidateTable table;
  std::map<std::string, std::size_t> candidate_index;
  for (const SeriesTable& series : wide.entities) {
    for (const std::string& column : series.columns) {
      if (starts_with(column, "bbcv")) candidate_index.emplace(column, 0);
    }
  }
  for (auto& [name, idx] : candidate_index) {
    idx = table.candidates.size();
    table.candidates.push_back(name);
  }
  const std::size_t n_cand = table.candidates.size();

  std::vector<std::vector<CandidateTable::Row>> slots(wide.entities.size());
  parallel_for(wide.entities.size(), [&](std::size_t e) {
    const SeriesTable& series = wide.entities[e];
    const std::size_t n = series.ts.size();
    for (const auto& column : series.values) {
      for (double v : column) {
        if (std::isnan(v)) throw ValidationError("candidate table needs a filled table");
      }
    }
    std::size_t tuplet_col = series.columns.size();
    std::vector<std::pair<std::size_t, std::size_t>> bbcv_cols;  // (candidate, column)
    for (std::size_t c = 0; c < series.columns.size(); ++c) {
      if (series.columns[c] == "tuplet") tuplet_col = c;
      auto it = candidate_index.find(series.columns[c]);
      if (it != candidate_index.end()) bbcv_cols.emplace_back(it->second, c);
    }
    const std::vector<double> zeros(n, 0.0);
    const std::vector<double>& tuplet =
        tuplet_col < series.columns.size() ? series.values[tuplet_col] : zeros;
    for (std::size_t end : window_ends(n, window, stride)) {
      const std::size_t start = end + 1 - window;
      CandidateTable::Row row;
      row.id = series.id;
      row.ts = series.ts[end];
      row.label = series.labels[end];
      row.tuplet_base = tuplet[end];
      const WindowStats ts = window_stats(std::span(tuplet).subspan(start, window), threshold);
      row.tuplet_tc = ts.tc;
      row.tuplet_var = ts.var;
      row.bbcv_base.assign(n_cand, 0.0);
      row.bbcv_tc.assign(n_cand, 0.0);
      row.bbcv_var.assign(n_cand, 0.0);
      for (const auto& [cand, col] : bbcv_cols) {
        const std::vector<double>& values = series.values[col];
        row.bbcv_base[cand] = values[end];
        const WindowStats bs = window_stats(std::span(values).subspan(start, window), threshold);
        row.bbcv_tc[cand] = bs.tc;
        row.bbcv_var[cand] = bs.var;
      }
      slots[e].push_back(std::move(row));
    }
  });
  for (auto& slot : slots) {
    table.rows.insert(table.rows.end(), std::make_move_iterator(slot.begin()),
                      std::make_move_iterator(slot.end()));
  }
  return table;
}

std::size_t fit_candidate_index(const CandidateTable& table,
                                std::span<const std::size_t> fit_rows) {
  if (table.candidates.empty()) throw ValidationError("no bbcv candidates to select from");
  std::vector<std::vector<double>> columns(table.candidates.size());
  for (auto& c : columns) c.reserve(fit_rows.size());
  for (std::size_t r : fit_rows) {
    const auto& row = table.rows.at(r);
    for (std::size_t c = 0; c < table.candidates.size(); ++c) {
      columns[c].push_back(row.bbcv_base[c]);
    }
  }
  return select_max_variance_column(columns);
}

FeatureTable select_candidate(const CandidateTable& table, std::size_t candidate_index) {
  if (!table.candidates.empty() && candidate_index >= table.candidates.size()) {
    throw ValidationError("candidate index out of range");
  }
  FeatureTable out;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    FeatureRow fr;
    fr.id = row.id;
    fr.ts = row.ts;
    fr.label = row.label;
    if (table.candidates.empty()) {
      fr.x = {0.0, row.tuplet_base, 0.0, 0.0, row.tuplet_tc, row.tuplet_var};
    } else {
      fr.x = {row.bbcv_base[candidate_index], row.tuplet_base, row.bbcv_tc[candidate_index],
              row.bbcv_var[candidate_index], row.tuplet_tc, row.tuplet_var};
    }
    out.rows.push_back(std::move(fr));
  }
  return out;
}

MinMaxScaler MinMaxScaler::fit(std::span<const std::array<double, kFeatureCount>> rows,
                               std::span<const std::size_t> columns) {
  if (rows.empty()) throw ValidationError("scaler fit needs at least one row");
  MinMaxScaler scaler;
  for (std::size_t c : columns) {
    if (c >= kFeatureCount) throw ValidationError("scaler column out of range");
    scaler.active[c] = true;
    double lo = rows[0][c];
    double hi = rows[0][c];
    for (const auto& row : rows) {
      lo = std::min(lo, row[c]);
      hi = std::max(hi, row[c]);
    }
    scaler.lo[c] = lo;
    scaler.hi[c] = hi;
  }
  return scaler;
}

std::array<double, kFeatureCount> MinMaxScaler::transform(
    const std::array<double, kFeatureCount>& x) const {
  std::array<double, kFeatureCount> out = x;
  for (std::size_t c = 0; c < kFeatureCount; ++c) {
    if (!active[c]) continue;
    const double span = hi[c] - lo[c];
    out[c] = span > 0.0 ? (x[c] - lo[c]) / span : 0.0;
  }
  return out;
}

std::vector<std::size_t> scaled_feature_columns() { return {0, 1, 3, 5}; }

namespace {
constexpr const char* kFeatureHeader =
    "ts,park,unit,component,bbcv_base,tuplet_base,bbcv_tc,bbcv_var,tuplet_tc,tuplet_var,label";
}

std::string feature_table_to_csv(const FeatureTable& table) {
  std::string out = kFeatureHeader;
  out.push_back('\n');
  for (const FeatureRow& row : table.rows) {
    out += format_timestamp(row.ts);
    out.push_back(',');
    out += row.id.park;
    out.push_back(',');
    out += row.id.unit;
    out.push_back(',');
    out += row.id.component;
    for (double v : row.x) {
      out.push_back(',');
      out += format_double(v);
    }
    out.push_back(',');
    out += format_int(fault_class_code(row.label));
    out.push_back('\n');
  }
  return out;
}

FeatureTable feature_table_from_csv(const std::string& text) {
  auto lines = split(text, '\n');
  if (lines.empty() || lines[0] != kFeatureHeader) {
    throw IoError("feature CSV: bad or missing header");
  }
  FeatureTable table;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    auto f = split(lines[i], ',');
    if (f.size() != 11) {
      throw IoError("feature CSV line " + std::to_string(i + 1) + ": expected 11 fields");
    }
    FeatureRow row;
    try {
      row.ts = parse_timestamp(f[0]);
    } catch (const ValidationError& e) {
      throw IoError("feature CSV line " + std::to_string(i + 1) + ": " + e.what());
    }
    row.id = EntityId{std::string(f[1]), std::string(f[2]), std::string(f[3])};
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      auto v = parse_double(f[4 + c]);
      if (!v || !std::isfinite(*v)) {
        throw IoError("feature CSV line " + std::to_string(i + 1) + ": bad feature value");
      }
      row.x[c] = *v;
    }
    auto label = parse_int(f[10]);
    if (!label) throw IoError("feature CSV line " + std::to_string(i + 1) + ": bad label");
    try {
      row.label = fault_class_from_code(static_cast<int>(*label));
    } catch (const ValidationError& e) {
      throw IoError("feature CSV line " + std::to_string(i + 1) + ": " + e.what());
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_feature_csv(const std::string& path, const FeatureTable& table) {
  write_file_atomic(path, feature_table_to_csv(table));
}

FeatureTable read_feature_csv(const std::string& path) {
  return feature_table_from_csv(read_text_file(path));
}

}  // namespace fdx
