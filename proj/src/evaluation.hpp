#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "domain.hpp"
#include "features.hpp"
#include "models/model.hpp"

namespace fdx {

// How per-class metrics are rolled up into a single headline number.
enum class Averaging {
  PerClass,    // no roll-up preference; aggregates fall back to all-class macro
  MacroFault,  // macro average over the two fault classes (default)
  Micro,       // pooled counts over all classes
};

std::string averaging_name(Averaging a);
Averaging averaging_from_name(const std::string& name);

// How cross-validation folds are formed.
enum class FoldMode {
  Stratified,  // per-class shuffle + round-robin deal (default)
  Blocked,     // contiguous per-class blocks in row order, no shuffling
};

std::string fold_mode_name(FoldMode m);
FoldMode fold_mode_from_name(const std::string& name);

struct MetricConfig {
  double beta = 0.5;
  int k_folds = 3;
  std::uint64_t seed = 0;
  Averaging averaging = Averaging::MacroFault;
  FoldMode fold_mode = FoldMode::Stratified;
  bool group_by_unit = false;  // folds split whole turbines instead of rows

  void validate() const;
};

// F_beta from precision and recall; 0 when the denominator is 0.
double f_beta(double precision, double recall, double beta);

// Fold builders. Each returns k disjoint index sets covering [0, n);
// indices within a fold are ascending.
//
// stratified_kfold shuffles each class independently (seeded) and deals
// round-robin, so per-class fold counts differ by at most one. Any class
// present with fewer than k rows is an error.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels,
                                                       int k, std::uint64_t seed);

// blocked_kfold keeps row order: each class is cut into k contiguous chunks.
std::vector<std::vector<std::size_t>> blocked_kfold(std::span<const int> labels, int k);

// grouped_kfold assigns whole groups (e.g. turbines) to folds round-robin
// after a seeded shuffle of the distinct group keys. Fewer groups than k is
// an error.
std::vector<std::vector<std::size_t>> grouped_kfold(std::span<const std::string> groups,
                                                    int k, std::uint64_t seed);

// Row-count confusion matrix indexed [truth][predicted] by class code.
struct Confusion {
  std::array<std::array<std::int64_t, kNumClasses>, kNumClasses> m{};

  std::int64_t total() const;
  Confusion& operator+=(const Confusion& other);
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_beta = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
};

// Two roll-up conventions are kept side by side: mean of per-class F scores
// (f_beta, f1) and F of the mean precision/recall (f_beta_of_means,
// f1_of_means). Micro averaging makes them coincide.
struct AggregateMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_beta = 0.0;
  double f1 = 0.0;
  double f_beta_of_means = 0.0;
  double f1_of_means = 0.0;
};

struct PrfResult {
  Confusion confusion;
  std::array<ClassMetrics, kNumClasses> per_class{};
};

PrfResult confusion_and_prf(std::span<const int> truth, std::span<const int> predicted,
                            double beta);

AggregateMetrics aggregate_metrics(const PrfResult& prf, Averaging averaging,
                                   double beta);

struct FoldMetrics {
  int fold = 0;
  PrfResult prf;
  AggregateMetrics aggregate;
};

struct UnitMetrics {
  UnitId unit;
  PrfResult prf;
  AggregateMetrics aggregate;
};

struct ModelReport {
  std::string model;
  ClassifierConfig config;
  PrfResult overall;           // pooled over folds, or the whole test set
  AggregateMetrics aggregate;  // cv: mean over folds; transfer: from overall
  std::vector<FoldMetrics> folds;      // cv only
  std::vector<UnitMetrics> per_unit;   // transfer only
  std::vector<int> predictions;        // aligned with the evaluated rows
};

struct EvaluationReport {
  std::string mode;  // "cv" or "transfer"
  MetricConfig config;
  std::vector<ModelReport> models;
};

// Trains `config` on the train rows of `table` and predicts the test rows.
// All fitted state (detector column choice, feature scaling) is derived from
// the train rows only; test labels are never read.
std::vector<int> evaluate_fold(const CandidateTable& table,
                               std::span<const std::size_t> train_idx,
                               std::span<const std::size_t> test_idx,
                               const ClassifierConfig& config);

// k-fold cross-validation of every configured classifier over `table`.
// The rule-based baseline is appended when absent so reports always carry it.
EvaluationReport cross_validate(const MetricConfig& metrics, const CandidateTable& table,
                                std::vector<ClassifierConfig> configs);

// Train on one table, evaluate on a disjoint one, with a per-turbine
// breakdown of the test-set results.
EvaluationReport transfer_evaluate(const MetricConfig& metrics,
                                   const CandidateTable& train,
                                   const CandidateTable& test,
                                   std::vector<ClassifierConfig> configs);

// Report serialization (sorted-key JSON) and the Markdown summary table.
std::string report_to_json(const EvaluationReport& report);
std::string report_markdown_from_json(const std::string& json_text);

}  // namespace fdx
