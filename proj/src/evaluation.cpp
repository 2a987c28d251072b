#include "evaluation.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "common.hpp"
#include "rng.hpp"

namespace fdx {

std::string averaging_name(Averaging a) {
  switch (a) {
    case Averaging::PerClass: return "per_class";
    case Averaging::MacroFault: return "macro_over_fault_classes";
    case Averaging::Micro: return "micro";
  }
  throw ValidationError("unknown averaging mode");
}

Averaging averaging_from_name(const std::string& name) {
  if (name == "per_class") return Averaging::PerClass;
  if (name == "macro_over_fault_classes") return Averaging::MacroFault;
  if (name == "micro") return Averaging::Micro;
  throw ValidationError("unknown averaging mode '" + name + "'");
}

std::string fold_mode_name(FoldMode m) {
  switch (m) {
    case FoldMode::Stratified: return "stratified";
    case FoldMode::Blocked: return "blocked";
  }
  throw ValidationError("unknown fold mode");
}

FoldMode fold_mode_from_name(const std::string& name) {
  if (name == "stratified") return FoldMode::Stratified;
  if (name == "blocked") return FoldMode::Blocked;
  throw ValidationError("unknown fold mode '" + name + "'");
}

void MetricConfig::validate() const {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (k_folds < 2) throw ValidationError("k_folds must be at least 2");
}

double f_beta(double precision, double recall, double beta) {
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

namespace {

std::array<std::vector<std::size_t>, kNumClasses> indices_by_class(
    std::span<const int> labels) {
  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int c = labels[i];
    if (c < 0 || c >= kNumClasses) {
      throw ValidationError("class code " + std::to_string(c) + " out of range");
    }
    by_class[static_cast<std::size_t>(c)].push_back(i);
  }
  return by_class;
}

void require_class_capacity(std::size_t count, int class_code, int k) {
  if (count > 0 && count < static_cast<std::size_t>(k)) {
    throw ValidationError("class " + fault_class_name(static_cast<FaultClass>(class_code)) +
                          " has only " + std::to_string(count) + " rows for " +
                          std::to_string(k) + " folds");
  }
}

void sort_folds(std::vector<std::vector<std::size_t>>& folds) {
  for (auto& f : folds) std::sort(f.begin(), f.end());
}

void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.below(i)]);
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const int> labels,
                                                       int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k_folds must be at least 2");
  auto by_class = indices_by_class(labels);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (int c = 0; c < kNumClasses; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    if (idx.empty()) continue;
    require_class_capacity(idx.size(), c, k);
    Rng rng = Rng::substream(seed, "fold:class:" + std::to_string(c));
    shuffle_indices(idx, rng);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      folds[i % static_cast<std::size_t>(k)].push_back(idx[i]);
    }
  }
  sort_folds(folds);
  return folds;
}

std::vector<std::vector<std::size_t>> blocked_kfold(std::span<const int> labels, int k) {
  if (k < 2) throw ValidationError("k_folds must be at least 2");
  auto by_class = indices_by_class(labels);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& idx = by_class[static_cast<std::size_t>(c)];
    if (idx.empty()) continue;
    require_class_capacity(idx.size(), c, k);
    const std::size_t n = idx.size();
    for (std::size_t f = 0; f < static_cast<std::size_t>(k); ++f) {
      const std::size_t lo = f * n / static_cast<std::size_t>(k);
      const std::size_t hi = (f + 1) * n / static_cast<std::size_t>(k);
      for (std::size_t i = lo; i < hi; ++i) folds[f].push_back(idx[i]);
    }
  }
  sort_folds(folds);
  return folds;
}

std::vector<std::vector<std::size_t>> grouped_kfold(std::span<const std::string> groups,
                                                    int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("k_folds must be at least 2");
  std::vector<std::string> distinct(groups.begin(), groups.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < static_cast<std::size_t>(k)) {
    throw ValidationError("grouped folds need at least " + std::to_string(k) +
                          " distinct groups, got " + std::to_string(distinct.size()));
  }
  std::vector<std::size_t> order(distinct.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng = Rng::substream(seed, "fold:group");
  shuffle_indices(order, rng);
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t i = 0; i < order.size(); ++i) {
    fold_of[distinct[order[i]]] = i % static_cast<std::size_t>(k);
  }
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < groups.size(); ++i) {
    folds[fold_of.at(groups[i])].push_back(i);
  }
  sort_folds(folds);
  return folds;
}

std::int64_t Confusion::total() const {
  std::int64_t sum = 0;
  for (const auto& row : m) {
    for (std::int64_t v : row) sum += v;
  }
  return sum;
}

Confusion& Confusion::operator+=(const Confusion& other) {
  for (std::size_t t = 0; t < m.size(); ++t) {
    for (std::size_t p = 0; p < m[t].size(); ++p) m[t][p] += other.m[t][p];
  }
  return *this;
}

PrfResult confusion_and_prf(std::span<const int> truth, std::span<const int> predicted,
                            double beta) {
  if (truth.size() != predicted.size()) {
    throw ValidationError("truth and prediction lengths differ");
  }
  PrfResult out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= kNumClasses || p < 0 || p >= kNumClasses) {
      throw ValidationError("class code out of range at row " + std::to_string(i));
    }
    ++out.confusion.m[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::int64_t tp = out.confusion.m[c][c];
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    for (std::size_t other = 0; other < kNumClasses; ++other) {
      if (other == c) continue;
      fp += out.confusion.m[other][c];
      fn += out.confusion.m[c][other];
    }
    ClassMetrics& cm = out.per_class[c];
    cm.support = tp + fn;
    cm.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    cm.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    cm.f_beta = f_beta(cm.precision, cm.recall, beta);
    cm.f1 = f_beta(cm.precision, cm.recall, 1.0);
  }
  return out;
}

AggregateMetrics aggregate_metrics(const PrfResult& prf, Averaging averaging,
                                   double beta) {
  AggregateMetrics agg;
  if (averaging == Averaging::Micro) {
    std::int64_t tp = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) tp += prf.confusion.m[c][c];
    const std::int64_t total = prf.confusion.total();
    const double acc = total > 0 ? static_cast<double>(tp) / static_cast<double>(total) : 0.0;
    agg.precision = agg.recall = acc;
    agg.f_beta = agg.f_beta_of_means = f_beta(acc, acc, beta);
    agg.f1 = agg.f1_of_means = f_beta(acc, acc, 1.0);
    return agg;
  }
  std::vector<std::size_t> classes;
  if (averaging == Averaging::MacroFault) {
    classes = {static_cast<std::size_t>(FaultClass::Bearing),
               static_cast<std::size_t>(FaultClass::Sensor)};
  } else {
    classes = {0, 1, 2};
  }
  for (std::size_t c : classes) {
    const ClassMetrics& cm = prf.per_class[c];
    agg.precision += cm.precision;
    agg.recall += cm.recall;
    agg.f_beta += cm.f_beta;
    agg.f1 += cm.f1;
  }
  const double n = static_cast<double>(classes.size());
  agg.precision /= n;
  agg.recall /= n;
  agg.f_beta /= n;
  agg.f1 /= n;
  agg.f_beta_of_means = f_beta(agg.precision, agg.recall, beta);
  agg.f1_of_means = f_beta(agg.precision, agg.recall, 1.0);
  return agg;
}

namespace {

std::array<double, kFeatureCount> row_features(const CandidateTable::Row& row,
                                               std::size_t candidate,
                                               bool has_candidates) {
  if (!has_candidates) {
    return {0.0, row.tuplet_base, 0.0, 0.0, row.tuplet_tc, row.tuplet_var};
  }
  return {row.bbcv_base[candidate], row.tuplet_base, row.bbcv_tc[candidate],
          row.bbcv_var[candidate],  row.tuplet_tc,   row.tuplet_var};
}

AggregateMetrics mean_aggregate(const std::vector<FoldMetrics>& folds) {
  AggregateMetrics mean;
  if (folds.empty()) return mean;
  for (const auto& f : folds) {
    mean.precision += f.aggregate.precision;
    mean.recall += f.aggregate.recall;
    mean.f_beta += f.aggregate.f_beta;
    mean.f1 += f.aggregate.f1;
    mean.f_beta_of_means += f.aggregate.f_beta_of_means;
    mean.f1_of_means += f.aggregate.f1_of_means;
  }
  const double n = static_cast<double>(folds.size());
  mean.precision /= n;
  mean.recall /= n;
  mean.f_beta /= n;
  mean.f1 /= n;
  mean.f_beta_of_means /= n;
  mean.f1_of_means /= n;
  return mean;
}

void append_baseline_if_absent(std::vector<ClassifierConfig>& configs) {
  for (const auto& c : configs) {
    if (c.kind == ModelKind::AboveOne) return;
  }
  ClassifierConfig baseline;
  baseline.kind = ModelKind::AboveOne;
  configs.push_back(baseline);
}

std::vector<int> row_labels(const CandidateTable& table) {
  std::vector<int> labels;
  labels.reserve(table.rows.size());
  for (const auto& row : table.rows) labels.push_back(static_cast<int>(row.label));
  return labels;
}

}  // namespace

std::vector<int> evaluate_fold(const CandidateTable& table,
                               std::span<const std::size_t> train_idx,
                               std::span<const std::size_t> test_idx,
                               const ClassifierConfig& config) {
  config.validate();
  const bool has_candidates = !table.candidates.empty();
  std::size_t candidate = 0;
  if (has_candidates) candidate = fit_candidate_index(table, train_idx);
  TrainData train;
  train.x.reserve(train_idx.size());
  train.y.reserve(train_idx.size());
  for (std::size_t i : train_idx) {
    const auto& row = table.rows.at(i);
    train.x.push_back(row_features(row, candidate, has_candidates));
    train.y.push_back(static_cast<int>(row.label));
  }
  std::unique_ptr<Model> model = train_model(config, train);
  std::vector<int> preds;
  preds.reserve(test_idx.size());
  for (std::size_t i : test_idx) {
    preds.push_back(model->predict_row(row_features(table.rows.at(i), candidate,
                                                    has_candidates)));
  }
  return preds;
}

EvaluationReport cross_validate(const MetricConfig& metrics, const CandidateTable& table,
                                std::vector<ClassifierConfig> configs) {
  metrics.validate();
  if (table.rows.empty()) {
    throw ValidationError("cross-validation needs at least one feature row");
  }
  append_baseline_if_absent(configs);
  for (const auto& c : configs) c.validate();

  const std::vector<int> labels = row_labels(table);
  std::vector<std::vector<std::size_t>> folds;
  if (metrics.group_by_unit) {
    std::vector<std::string> groups;
    groups.reserve(table.rows.size());
    for (const auto& row : table.rows) {
      groups.push_back(UnitId{row.id.park, row.id.unit}.str());
    }
    folds = grouped_kfold(groups, metrics.k_folds, metrics.seed);
  } else if (metrics.fold_mode == FoldMode::Blocked) {
    folds = blocked_kfold(labels, metrics.k_folds);
  } else {
    folds = stratified_kfold(labels, metrics.k_folds, metrics.seed);
  }

  const std::size_t n = table.rows.size();
  std::vector<std::vector<std::size_t>> train_sets(folds.size());
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> in_test(n, 0);
    for (std::size_t i : folds[f]) in_test[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_test[i]) train_sets[f].push_back(i);
    }
    if (train_sets[f].empty()) {
      throw ValidationError("fold " + std::to_string(f) + " leaves no training rows");
    }
  }

  EvaluationReport report;
  report.mode = "cv";
  report.config = metrics;
  for (const auto& config : configs) {
    ModelReport mr;
    mr.model = config.name();
    mr.config = config;
    mr.predictions.assign(n, 0);
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<int> preds = evaluate_fold(table, train_sets[f], folds[f], config);
      std::vector<int> fold_truth;
      fold_truth.reserve(folds[f].size());
      for (std::size_t j = 0; j < folds[f].size(); ++j) {
        mr.predictions[folds[f][j]] = preds[j];
        fold_truth.push_back(labels[folds[f][j]]);
      }
      FoldMetrics fm;
      fm.fold = static_cast<int>(f);
      fm.prf = confusion_and_prf(fold_truth, preds, metrics.beta);
      fm.aggregate = aggregate_metrics(fm.prf, metrics.averaging, metrics.beta);
      mr.folds.push_back(std::move(fm));
    }
    mr.overall = confusion_and_prf(labels, mr.predictions, metrics.beta);
    mr.aggregate = mean_aggregate(mr.folds);
    report.models.push_back(std::move(mr));
  }
  return report;
}

EvaluationReport transfer_evaluate(const MetricConfig& metrics,
                                   const CandidateTable& train,
                                   const CandidateTable& test,
                                   std::vector<ClassifierConfig> configs) {
  metrics.validate();
  if (train.rows.empty()) throw ValidationError("transfer training table is empty");
  if (test.rows.empty()) throw ValidationError("transfer test table is empty");
  {
    std::map<std::pair<std::string, Timestamp>, int> seen;
    for (const auto& row : train.rows) seen[{row.id.str(), row.ts}] = 1;
    for (const auto& row : test.rows) {
      if (seen.count({row.id.str(), row.ts})) {
        throw ValidationError("train and test rows overlap at " + row.id.str());
      }
    }
  }
  append_baseline_if_absent(configs);
  for (const auto& c : configs) c.validate();

  const bool has_candidates = !train.candidates.empty();
  std::size_t train_candidate = 0;
  std::size_t test_candidate = 0;
  if (has_candidates) {
    std::vector<std::size_t> all_train(train.rows.size());
    for (std::size_t i = 0; i < all_train.size(); ++i) all_train[i] = i;
    train_candidate = fit_candidate_index(train, all_train);
    const std::string& name = train.candidates[train_candidate];
    auto it = std::find(test.candidates.begin(), test.candidates.end(), name);
    if (it == test.candidates.end()) {
      throw ValidationError("test table lacks detector column '" + name + "'");
    }
    test_candidate = static_cast<std::size_t>(it - test.candidates.begin());
  } else if (!test.candidates.empty()) {
    throw ValidationError("test table has detector columns the training table lacks");
  }

  TrainData train_data;
  train_data.x.reserve(train.rows.size());
  train_data.y.reserve(train.rows.size());
  for (const auto& row : train.rows) {
    train_data.x.push_back(row_features(row, train_candidate, has_candidates));
    train_data.y.push_back(static_cast<int>(row.label));
  }
  const std::vector<int> test_labels = row_labels(test);
  std::map<UnitId, std::vector<std::size_t>> unit_rows;
  for (std::size_t i = 0; i < test.rows.size(); ++i) {
    unit_rows[UnitId{test.rows[i].id.park, test.rows[i].id.unit}].push_back(i);
  }

  EvaluationReport report;
  report.mode = "transfer";
  report.config = metrics;
  for (const auto& config : configs) {
    ModelReport mr;
    mr.model = config.name();
    mr.config = config;
    std::unique_ptr<Model> model = train_model(config, train_data);
    mr.predictions.reserve(test.rows.size());
    for (const auto& row : test.rows) {
      mr.predictions.push_back(
          model->predict_row(row_features(row, test_candidate, has_candidates)));
    }
    mr.overall = confusion_and_prf(test_labels, mr.predictions, metrics.beta);
    mr.aggregate = aggregate_metrics(mr.overall, metrics.averaging, metrics.beta);
    for (const auto& [unit, rows] : unit_rows) {
      std::vector<int> t;
      std::vector<int> p;
      t.reserve(rows.size());
      p.reserve(rows.size());
      for (std::size_t i : rows) {
        t.push_back(test_labels[i]);
        p.push_back(mr.predictions[i]);
      }
      UnitMetrics um;
      um.unit = unit;
      um.prf = confusion_and_prf(t, p, metrics.beta);
      um.aggregate = aggregate_metrics(um.prf, metrics.averaging, metrics.beta);
      mr.per_unit.push_back(std::move(um));
    }
    report.models.push_back(std::move(mr));
  }
  return report;
}

}  // namespace fdx
