#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "preprocess.hpp"

namespace fdx {

// Column order of the classifier feature vector.
inline constexpr std::array<const char*, 6> kFeatureNames = {
    "bbcv_base", "tuplet_base", "bbcv_tc", "bbcv_var", "tuplet_tc", "tuplet_var"};
constexpr std::size_t kFeatureCount = 6;

// 1 iff the one-sided Mann-Kendall p-value clears the certainty threshold.
int trend_certainty(double p_pos, double threshold = 0.001);

struct WindowStats {
  int tc = 0;
  double var = 0.0;
};

// A window with every score below 1.0 is quiet: (0, 0.0). Otherwise the
// trend certainty of the window plus its population variance.
WindowStats window_stats(std::span<const double> window, double threshold = 0.001);

struct FeatureRow {
  EntityId id;
  Timestamp ts = 0;  // window end
  std::array<double, kFeatureCount> x{};
  FaultClass label = FaultClass::Normal;
};

struct FeatureTable {
  std::vector<FeatureRow> rows;
};

// Sliding windows of `window` rows advancing by `stride` per entity; each
// emits one row keyed (and labeled) by its last timestamp. window >= 4.
FeatureTable build_feature_rows(const BaseTable& base, std::size_t window, std::size_t stride);

// Per-fold pipelines re-fit the bbcv column reduction on their own training
// rows, so this table keeps every candidate's (base, tc, var) triple.
struct CandidateTable {
  std::vector<std::string> candidates;  // sorted bbcv column names
  struct Row {
    EntityId id;
    Timestamp ts = 0;
    FaultClass label = FaultClass::Normal;
    double tuplet_base = 0.0;
    double tuplet_tc = 0.0;
    double tuplet_var = 0.0;
    std::vector<double> bbcv_base;  // per candidate
    std::vector<double> bbcv_tc;
    std::vector<double> bbcv_var;
  };
  std::vector<Row> rows;
};

CandidateTable build_candidate_table(const WideTable& wide, std::size_t window,
                                     std::size_t stride, double threshold = 0.001);

// Candidate whose base values have the largest population variance over
// fit_rows (indices into table.rows); ties pick the lowest index.
std::size_t fit_candidate_index(const CandidateTable& table,
                                std::span<const std::size_t> fit_rows);

// Collapses the candidate axis to final 6-feature rows. An empty candidate
// list yields zero bbcv features.
FeatureTable select_candidate(const CandidateTable& table, std::size_t candidate_index);

// Min-max scaler fitted on training rows. Only the columns listed at fit
// time are transformed; a constant column maps to 0.0. No clamping.
struct MinMaxScaler {
  std::array<bool, kFeatureCount> active{};
  std::array<double, kFeatureCount> lo{};
  std::array<double, kFeatureCount> hi{};

  static MinMaxScaler fit(std::span<const std::array<double, kFeatureCount>> rows,
                          std::span<const std::size_t> columns);
  std::array<double, kFeatureCount> transform(const std::array<double, kFeatureCount>& x) const;
};

// The continuous columns: both bases and both window variances.
std::vector<std::size_t> scaled_feature_columns();

// CSV with header
// `ts,park,unit,component,bbcv_base,tuplet_base,bbcv_tc,bbcv_var,tuplet_tc,tuplet_var,label`.
std::string feature_table_to_csv(const FeatureTable& table);
FeatureTable feature_table_from_csv(const std::string& text);
void write_feature_csv(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_csv(const std::string& path);

}  // namespace fdx
