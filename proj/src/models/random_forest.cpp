#include <algorithm>
#include <cmath>
#include <numeric>

#include "../common.hpp"
#include "../parallel.hpp"
#include "../rng.hpp"
#include "internal.hpp"

namespace fdx {

using nlohmann::json;

namespace {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::array<double, kNumClasses> counts{};  // weighted class counts at the leaf
};

struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& route(const std::array<double, kFeatureCount>& x) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const TreeNode& n = nodes[static_cast<std::size_t>(at)];
      at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)];
  }
};

double gini(const std::array<double, kNumClasses>& counts, double total) {
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

struct TreeBuilder {
  const TrainData& data;
  const std::array<double, kNumClasses>& weights;
  const RandomForestConfig& cfg;
  Rng& rng;
  std::vector<TreeNode> nodes;

  std::array<double, kNumClasses> class_counts(const std::vector<std::size_t>& rows) const {
    std::array<double, kNumClasses> counts{};
    for (std::size_t r : rows) {
      counts[static_cast<std::size_t>(data.y[r])] += weights[static_cast<std::size_t>(data.y[r])];
    }
    return counts;
  }

  int build(const std::vector<std::size_t>& rows, int depth) {
    const int idx = static_cast<int>(nodes.size());
    nodes.emplace_back();
    const auto counts = class_counts(rows);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    const double impurity = gini(counts, total);

    const bool depth_capped = cfg.max_depth > 0 && depth >= cfg.max_depth;
    if (impurity <= 0.0 || rows.size() < static_cast<std::size_t>(cfg.min_samples_split) ||
        depth_capped) {
      nodes[static_cast<std::size_t>(idx)].counts = counts;
      return idx;
    }

    // Candidate features: a partial Fisher-Yates draw without replacement.
    std::array<std::size_t, kFeatureCount> pool;
    std::iota(pool.begin(), pool.end(), 0);
    const std::size_t n_cand = static_cast<std::size_t>(cfg.max_features);
    for (std::size_t j = 0; j < n_cand; ++j) {
      std::swap(pool[j], pool[j + rng.below(kFeatureCount - j)]);
    }

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_score = impurity;  // split must strictly improve
    std::vector<std::pair<double, int>> sorted;  // (value, class)
    for (std::size_t j = 0; j < n_cand; ++j) {
      const std::size_t f = pool[j];
      sorted.clear();
      for (std::size_t r : rows) sorted.emplace_back(data.x[r][f], data.y[r]);
      std::sort(sorted.begin(), sorted.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      std::array<double, kNumClasses> left{};
      double left_total = 0.0;
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        const auto cls = static_cast<std::size_t>(sorted[i].second);
        left[cls] += weights[cls];
        left_total += weights[cls];
        if (sorted[i].first == sorted[i + 1].first) continue;
        std::array<double, kNumClasses> right{};
        for (std::size_t c = 0; c < kNumClasses; ++c) right[c] = counts[c] - left[c];
        const double right_total = total - left_total;
        const double score = (left_total * gini(left, left_total) +
                              right_total * gini(right, right_total)) /
                             total;
        if (score < best_score) {
          best_score = score;
          best_feature = static_cast<int>(f);
          best_threshold = sorted[i].first + (sorted[i + 1].first - sorted[i].first) / 2.0;
        }
      }
    }

    if (best_feature < 0) {
      nodes[static_cast<std::size_t>(idx)].counts = counts;
      return idx;
    }

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (std::size_t r : rows) {
      (data.x[r][static_cast<std::size_t>(best_feature)] <= best_threshold ? left_rows
                                                                           : right_rows)
          .push_back(r);
    }
    const int left = build(left_rows, depth + 1);
    const int right = build(right_rows, depth + 1);
    TreeNode& node = nodes[static_cast<std::size_t>(idx)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = left;
    node.right = right;
    return idx;
  }
};

class RandomForestModel final : public Model {
 public:
  RandomForestModel(ClassifierConfig config, std::vector<Tree> trees)
      : Model(std::move(config)), trees_(std::move(trees)) {}

  int predict_row(const std::array<double, kFeatureCount>& x) const override {
    return argmax_class(predict_scores(x));
  }

  std::array<double, kNumClasses> predict_scores(
      const std::array<double, kFeatureCount>& x) const override {
    std::array<double, kNumClasses> votes{};
    for (const Tree& tree : trees_) {
      votes[static_cast<std::size_t>(argmax_class(tree.route(x).counts))] += 1.0;
    }
    if (!trees_.empty()) {
      for (double& v : votes) v /= static_cast<double>(trees_.size());
    }
    return votes;
  }

  json params_json() const override {
    json trees = json::array();
    for (const Tree& tree : trees_) {
      json nodes = json::array();
      for (const TreeNode& node : tree.nodes) {
        json n{{"feature", node.feature},
               {"threshold", node.threshold},
               {"left", node.left},
               {"right", node.right}};
        n["leaf_value"] = node.feature < 0 ? json(node.counts) : json();
        nodes.push_back(std::move(n));
      }
      trees.push_back({{"nodes", std::move(nodes)}});
    }
    return json{{"trees", std::move(trees)}};
  }

 private:
  std::vector<Tree> trees_;
};

}  // namespace

namespace detail {

std::unique_ptr<Model> train_random_forest(const ClassifierConfig& config,
                                           const TrainData& data) {
  check_train_data(data, /*require_all_classes=*/true);
  const std::size_t n = data.x.size();
  std::vector<Tree> trees(static_cast<std::size_t>(config.rf.trees));
  parallel_for(trees.size(), [&](std::size_t t) {
    Rng rng = Rng::substream(config.seed, "rf:tree:" + std::to_string(t));
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = rng.below(n);
    TreeBuilder builder{data, config.class_weights, config.rf, rng, {}};
    builder.build(rows, 0);
    trees[t].nodes = std::move(builder.nodes);
  });
  return std::make_unique<RandomForestModel>(config, std::move(trees));
}

std::unique_ptr<Model> random_forest_from_params(const ClassifierConfig& config,
                                                 const json& params) {
  std::vector<Tree> trees;
  for (const auto& tj : params.at("trees")) {
    Tree tree;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode node;
      node.feature = nj.at("feature").get<int>();
      node.threshold = nj.at("threshold").get<double>();
      node.left = nj.at("left").get<int>();
      node.right = nj.at("right").get<int>();
      if (node.feature < 0) {
        const auto counts = nj.at("leaf_value").get<std::vector<double>>();
        if (counts.size() != kNumClasses) throw IoError("model file: bad leaf counts");
        std::copy(counts.begin(), counts.end(), node.counts.begin());
      } else if (node.feature >= static_cast<int>(kFeatureCount)) {
        throw IoError("model file: tree feature index out of range");
      }
      tree.nodes.push_back(std::move(node));
    }
    if (tree.nodes.empty()) throw IoError("model file: empty tree");
    for (const TreeNode& node : tree.nodes) {
      if (node.feature >= 0 &&
          (node.left < 0 || node.right < 0 ||
           node.left >= static_cast<int>(tree.nodes.size()) ||
           node.right >= static_cast<int>(tree.nodes.size()))) {
        throw IoError("model file: tree child index out of range");
      }
    }
    trees.push_back(std::move(tree));
  }
  return std::make_unique<RandomForestModel>(config, std::move(trees));
}

}  // namespace detail

}  // namespace fdx
