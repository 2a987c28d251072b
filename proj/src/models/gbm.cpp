#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "../common.hpp"
#include "../parallel.hpp"
#include "internal.hpp"

namespace fdx {

using nlohmann::json;

namespace {

constexpr double kHessianGuard = 1e-6;
constexpr double kMinGain = 1e-12;

struct GbmNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf_value = 0.0;  // shrinkage already applied
};

struct GbmTree {
  std::vector<GbmNode> nodes;

  double route(const std::array<double, kFeatureCount>& x) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const GbmNode& n = nodes[static_cast<std::size_t>(at)];
      at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].leaf_value;
  }
};

// Per-feature value-to-bin mapping. Bin b holds values <= boundaries[b];
// the last bin is unbounded. Boundaries sit at midpoints between distinct
// values, picked at evenly spaced distinct-value ranks when there are more
// distinct values than bins — so small instances get one bin per value.
struct BinMapper {
  std::vector<double> boundaries;

  std::uint8_t bin_of(double v) const {
    const auto it = std::lower_bound(boundaries.begin(), boundaries.end(), v);
    return static_cast<std::uint8_t>(it - boundaries.begin());
  }
  std::size_t bins() const { return boundaries.size() + 1; }
};

BinMapper build_bins(const TrainData& data, std::size_t feature, int max_bins) {
  std::vector<double> values;
  values.reserve(data.x.size());
  for (const auto& row : data.x) values.push_back(row[feature]);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  BinMapper mapper;
  const std::size_t n = values.size();
  const std::size_t cap = static_cast<std::size_t>(max_bins);
  if (n <= cap) {
    for (std::size_t i = 0; i + 1 < n; ++i) {
      mapper.boundaries.push_back(values[i] + (values[i + 1] - values[i]) / 2.0);
    }
    return mapper;
  }
  for (std::size_t b = 1; b < cap; ++b) {
    const std::size_t at = b * n / cap;
    mapper.boundaries.push_back(values[at - 1] + (values[at] - values[at - 1]) / 2.0);
  }
  return mapper;
}

struct HistCell {
  double g = 0.0;
  double h = 0.0;
  std::size_t count = 0;
};

struct SplitChoice {
  double gain = 0.0;
  int feature = -1;
  std::size_t bin = 0;  // rows with bin <= this go left
};

struct Leaf {
  std::vector<std::size_t> rows;
  double g = 0.0;
  double h = 0.0;
  SplitChoice best;
};

double leaf_objective(double g, double h) { return g * g / (h + kHessianGuard); }

// Grows one regression tree on (g, h) leaf-wise: always split the leaf with
// the largest gain until max_leaves or no positive gain remains.
GbmTree build_tree(const TrainData& data, const std::vector<BinMapper>& mappers,
                   const std::vector<std::vector<std::uint8_t>>& binned,
                   const std::vector<double>& g, const std::vector<double>& h,
                   const GbmConfig& cfg, double learning_rate) {
  const std::size_t min_leaf = static_cast<std::size_t>(cfg.min_samples_leaf);

  auto find_best = [&](Leaf& leaf) {
    leaf.best = SplitChoice{};
    if (leaf.rows.size() < 2 * min_leaf) return;
    const double parent_obj = leaf_objective(leaf.g, leaf.h);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const std::size_t n_bins = mappers[f].bins();
      if (n_bins < 2) continue;
      std::vector<HistCell> hist(n_bins);
      for (std::size_t r : leaf.rows) {
        HistCell& cell = hist[binned[f][r]];
        cell.g += g[r];
        cell.h += h[r];
        ++cell.count;
      }
      double left_g = 0.0;
      double left_h = 0.0;
      std::size_t left_count = 0;
      for (std::size_t b = 0; b + 1 < n_bins; ++b) {
        left_g += hist[b].g;
        left_h += hist[b].h;
        left_count += hist[b].count;
        const std::size_t right_count = leaf.rows.size() - left_count;
        if (left_count < min_leaf || right_count < min_leaf) continue;
        const double gain = leaf_objective(left_g, left_h) +
                            leaf_objective(leaf.g - left_g, leaf.h - left_h) - parent_obj;
        if (gain > leaf.best.gain && gain > kMinGain) {
          leaf.best = SplitChoice{gain, static_cast<int>(f), b};
        }
      }
    }
  };

  GbmTree tree;
  std::vector<Leaf> leaves;
  std::vector<int> leaf_nodes;  // node index of each open leaf

  Leaf root;
  root.rows.resize(data.x.size());
  std::iota(root.rows.begin(), root.rows.end(), 0);
  for (std::size_t r : root.rows) {
    root.g += g[r];
    root.h += h[r];
  }
  find_best(root);
  leaves.push_back(std::move(root));
  tree.nodes.emplace_back();
  leaf_nodes.push_back(0);

  while (leaves.size() < static_cast<std::size_t>(cfg.max_leaves)) {
    std::size_t pick = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (leaves[i].best.feature < 0) continue;
      if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
    }
    if (pick == leaves.size()) break;

    Leaf& parent = leaves[pick];
    const SplitChoice choice = parent.best;
    const std::size_t f = static_cast<std::size_t>(choice.feature);
    Leaf left;
    Leaf right;
    for (std::size_t r : parent.rows) {
      (binned[f][r] <= choice.bin ? left : right).rows.push_back(r);
      if (binned[f][r] <= choice.bin) {
        left.g += g[r];
        left.h += h[r];
      } else {
        right.g += g[r];
        right.h += h[r];
      }
    }
    find_best(left);
    find_best(right);

    const int parent_node = leaf_nodes[pick];
    const int left_node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const int right_node = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(parent_node)].feature = choice.feature;
    tree.nodes[static_cast<std::size_t>(parent_node)].threshold =
        mappers[f].boundaries[choice.bin];
    tree.nodes[static_cast<std::size_t>(parent_node)].left = left_node;
    tree.nodes[static_cast<std::size_t>(parent_node)].right = right_node;

    leaves[pick] = std::move(left);
    leaf_nodes[pick] = left_node;
    leaves.push_back(std::move(right));
    leaf_nodes.push_back(right_node);
  }

  for (std::size_t i = 0; i < leaves.size(); ++i) {
    tree.nodes[static_cast<std::size_t>(leaf_nodes[i])].leaf_value =
        learning_rate * (-leaves[i].g / (leaves[i].h + kHessianGuard));
  }
  return tree;
}

class GbmModel final : public Model {
 public:
  // trees[round * kNumClasses + class]
  GbmModel(ClassifierConfig config, std::vector<GbmTree> trees)
      : Model(std::move(config)), trees_(std::move(trees)) {}

  int predict_row(const std::array<double, kFeatureCount>& x) const override {
    return argmax_class(raw_scores(x));
  }

  std::array<double, kNumClasses> predict_scores(
      const std::array<double, kFeatureCount>& x) const override {
    const auto raw = raw_scores(x);
    const double peak = *std::max_element(raw.begin(), raw.end());
    std::array<double, kNumClasses> p{};
    double sum = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      p[c] = std::exp(raw[c] - peak);
      sum += p[c];
    }
    for (double& v : p) v /= sum;
    return p;
  }

  json params_json() const override {
    json trees = json::array();
    for (const GbmTree& tree : trees_) {
      json nodes = json::array();
      for (const GbmNode& node : tree.nodes) {
        nodes.push_back({{"feature", node.feature},
                         {"threshold", node.threshold},
                         {"left", node.left},
                         {"right", node.right},
                         {"leaf_value", node.feature < 0 ? json(node.leaf_value) : json()}});
      }
      trees.push_back({{"nodes", std::move(nodes)}});
    }
    return json{{"trees", std::move(trees)}};
  }

 private:
  std::array<double, kNumClasses> raw_scores(const std::array<double, kFeatureCount>& x) const {
    std::array<double, kNumClasses> scores{};
    for (std::size_t t = 0; t < trees_.size(); ++t) {
      scores[t % kNumClasses] += trees_[t].route(x);
    }
    return scores;
  }

  std::vector<GbmTree> trees_;
};

}  // namespace

namespace detail {

std::unique_ptr<Model> train_gbm(const ClassifierConfig& config, const TrainData& data) {
  check_train_data(data, /*require_all_classes=*/true);
  const std::size_t n = data.x.size();

  std::vector<BinMapper> mappers(kFeatureCount);
  std::vector<std::vector<std::uint8_t>> binned(kFeatureCount);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    mappers[f] = build_bins(data, f, config.gbm.max_bins);
    binned[f].resize(n);
    for (std::size_t r = 0; r < n; ++r) binned[f][r] = mappers[f].bin_of(data.x[r][f]);
  }

  std::vector<std::array<double, kNumClasses>> logits(n, {0.0, 0.0, 0.0});
  std::vector<GbmTree> trees;
  std::vector<std::vector<double>> g(kNumClasses, std::vector<double>(n));
  std::vector<std::vector<double>> h(kNumClasses, std::vector<double>(n));
  std::vector<GbmTree> round_trees(kNumClasses);

  for (int round = 0; round < config.gbm.rounds; ++round) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto& z = logits[r];
      const double peak = *std::max_element(z.begin(), z.end());
      std::array<double, kNumClasses> p;
      double sum = 0.0;
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        p[c] = std::exp(z[c] - peak);
        sum += p[c];
      }
      const double w = config.class_weights[static_cast<std::size_t>(data.y[r])];
      for (std::size_t c = 0; c < kNumClasses; ++c) {
        p[c] /= sum;
        const double target = static_cast<int>(c) == data.y[r] ? 1.0 : 0.0;
        g[c][r] = w * (p[c] - target);
        h[c][r] = w * p[c] * (1.0 - p[c]);
      }
    }
    parallel_for(kNumClasses, [&](std::size_t c) {
      round_trees[c] =
          build_tree(data, mappers, binned, g[c], h[c], config.gbm, config.gbm.learning_rate);
    });
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      for (std::size_t r = 0; r < n; ++r) logits[r][c] += round_trees[c].route(data.x[r]);
      trees.push_back(std::move(round_trees[c]));
    }
  }
  return std::make_unique<GbmModel>(config, std::move(trees));
}

std::unique_ptr<Model> gbm_from_params(const ClassifierConfig& config, const json& params) {
  std::vector<GbmTree> trees;
  for (const auto& tj : params.at("trees")) {
    GbmTree tree;
    for (const auto& nj : tj.at("nodes")) {
      GbmNode node;
      node.feature = nj.at("feature").get<int>();
      node.threshold = nj.at("threshold").get<double>();
      node.left = nj.at("left").get<int>();
      node.right = nj.at("right").get<int>();
      if (node.feature < 0) {
        node.leaf_value = nj.at("leaf_value").get<double>();
      } else if (node.feature >= static_cast<int>(kFeatureCount)) {
        throw IoError("model file: tree feature index out of range");
      }
      tree.nodes.push_back(std::move(node));
    }
    if (tree.nodes.empty()) throw IoError("model file: empty tree");
    for (const GbmNode& node : tree.nodes) {
      if (node.feature >= 0 &&
          (node.left < 0 || node.right < 0 ||
           node.left >= static_cast<int>(tree.nodes.size()) ||
           node.right >= static_cast<int>(tree.nodes.size()))) {
        throw IoError("model file: tree child index out of range");
      }
    }
    trees.push_back(std::move(tree));
  }
  if (trees.size() % kNumClasses != 0) {
    throw IoError("model file: gbm tree count must be a multiple of the class count");
  }
  return std::make_unique<GbmModel>(config, std::move(trees));
}

}  // namespace detail

}  // namespace fdx
