#pragma once

// CART trees and bagged forests (regression on MSE, classification on Gini).

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "benloc/common.hpp"

namespace benloc {

struct TreeParams {
  int max_depth = 12;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  double max_features = 0.0;  // fraction of features per split; 0 means sqrt(d)
  bool bootstrap = true;

  std::size_t features_per_split(std::size_t d) const {
    if (d == 0) return 0;
    double k = max_features > 0.0 ? max_features * static_cast<double>(d) : std::sqrt(static_cast<double>(d));
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::floor(k)), 1, d);
  }
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  // regression: {mean}; classification: class shares
  double gain = 0.0;          // weighted impurity decrease of this split
};

/// Row-major feature matrix view.
struct FeatureMatrix {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return data.subspan(r * cols, cols); }
};

class DecisionTree {
 public:
  std::vector<TreeNode> nodes;

  const std::vector<double>& predict(std::span<const double> x) const {
    std::size_t at = 0;
    while (nodes[at].feature >= 0) {
      const auto& n = nodes[at];
      at = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[at].value;
  }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.feature < 0; }));
  }

  /// Per-feature impurity decrease normalised to sum 1 (all zero for a stump-free tree).
  std::vector<double> importances(std::size_t d) const {
    std::vector<double> imp(d, 0.0);
    for (const auto& n : nodes)
      if (n.feature >= 0) imp[static_cast<std::size_t>(n.feature)] += n.gain;
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0.0)
      for (auto& v : imp) v /= total;
    return imp;
  }
};

namespace detail {

// Regression targets: impurity is the variance.
struct MseCriterion {
  std::span<const double> y;

  struct Stats {
    double n = 0, sum = 0, sumsq = 0;
    void add(double v) { n += 1; sum += v; sumsq += v * v; }
    void remove(double v) { n -= 1; sum -= v; sumsq -= v * v; }
  };

  Stats stats(std::span<const std::size_t> idx) const {
    Stats s;
    for (auto i : idx) s.add(y[i]);
    return s;
  }
  Stats empty() const { return {}; }
  void add(Stats& s, std::size_t i) const { s.add(y[i]); }
  void remove(Stats& s, std::size_t i) const { s.remove(y[i]); }
  static double impurity(const Stats& s) {
    if (s.n <= 0) return 0.0;
    const double mean = s.sum / s.n;
    return std::max(0.0, s.sumsq / s.n - mean * mean);
  }
  static std::vector<double> leaf(const Stats& s) { return {s.n > 0 ? s.sum / s.n : 0.0}; }
};

// Class targets in [0, classes): impurity is Gini.
struct GiniCriterion {
  std::span<const std::size_t> y;
  std::size_t classes;

  struct Stats {
    double n = 0;
    std::vector<double> counts;
  };

  Stats empty() const { return {0, std::vector<double>(classes, 0.0)}; }
  Stats stats(std::span<const std::size_t> idx) const {
    Stats s = empty();
    for (auto i : idx) add(s, i);
    return s;
  }
  void add(Stats& s, std::size_t i) const { s.n += 1; s.counts[y[i]] += 1; }
  void remove(Stats& s, std::size_t i) const { s.n -= 1; s.counts[y[i]] -= 1; }
  static double impurity(const Stats& s) {
    if (s.n <= 0) return 0.0;
    double acc = 1.0;
    for (double c : s.counts) acc -= (c / s.n) * (c / s.n);
    return std::max(0.0, acc);
  }
  static std::vector<double> leaf(const Stats& s) {
    std::vector<double> v = s.counts;
    if (s.n > 0)
      for (auto& c : v) c /= s.n;
    return v;
  }
};

template <typename Criterion>
class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, const Criterion& crit, const TreeParams& params, Engine& eng)
      : x_(x), crit_(crit), params_(params), eng_(eng) {}

  DecisionTree build(std::vector<std::size_t> idx) {
    DecisionTree tree;
    grow(tree, idx, 0);
    return tree;
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left_count = 0;
  };

  int grow(DecisionTree& tree, std::vector<std::size_t>& idx, int depth) {
    const int at = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto st = crit_.stats(idx);
    const double imp = Criterion::impurity(st);
    tree.nodes[at].value = Criterion::leaf(st);

    if (depth >= params_.max_depth || idx.size() < params_.min_samples_split || imp <= 1e-14) return at;
    const Split best = find_split(idx, st, imp);
    if (best.feature < 0) return at;

    std::vector<std::size_t> left, right;
    left.reserve(best.left_count);
    right.reserve(idx.size() - best.left_count);
    for (auto i : idx)
      (x_.at(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    tree.nodes[at].feature = best.feature;
    tree.nodes[at].threshold = best.threshold;
    tree.nodes[at].gain = best.gain;
    const int l = grow(tree, left, depth + 1);
    const int r = grow(tree, right, depth + 1);
    tree.nodes[at].left = l;
    tree.nodes[at].right = r;
    return at;
  }

  // Examines a random subset of features; keeps drawing beyond the subset
  // only if none of them admits a valid split.
  Split find_split(const std::vector<std::size_t>& idx, const typename Criterion::Stats& parent, double parent_imp) {
    std::vector<std::size_t> feats(x_.cols);
    std::iota(feats.begin(), feats.end(), std::size_t{0});
    const std::size_t mtry = params_.features_per_split(x_.cols);
    const double n = static_cast<double>(idx.size());
    Split best;
    std::vector<std::size_t> order(idx);
    for (std::size_t k = 0; k < feats.size(); ++k) {
      const auto j = k + static_cast<std::size_t>(uniform_below(eng_, feats.size() - k));
      std::swap(feats[k], feats[j]);
      if (k >= mtry && best.feature >= 0) break;
      const std::size_t f = feats[k];
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double xa = x_.at(a, f), xb = x_.at(b, f);
        return xa != xb ? xa < xb : a < b;
      });
      auto left = crit_.empty();
      auto right = parent;
      for (std::size_t p = 0; p + 1 < order.size(); ++p) {
        crit_.add(left, order[p]);
        crit_.remove(right, order[p]);
        const double xv = x_.at(order[p], f), xn = x_.at(order[p + 1], f);
        if (xv == xn) continue;
        const std::size_t nl = p + 1, nr = order.size() - nl;
        if (nl < params_.min_samples_leaf || nr < params_.min_samples_leaf) continue;
        const double gain = n * parent_imp - static_cast<double>(nl) * Criterion::impurity(left) -
                            static_cast<double>(nr) * Criterion::impurity(right);
        if (gain > best.gain + 1e-12) {
          double thr = 0.5 * (xv + xn);
          if (!(thr < xn)) thr = xv;
          best = {static_cast<int>(f), thr, gain, nl};
        }
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  const Criterion& crit_;
  const TreeParams& params_;
  Engine& eng_;
};

inline std::vector<std::size_t> sample_rows(std::size_t n, bool bootstrap, Engine& eng) {
  std::vector<std::size_t> idx(n);
  if (bootstrap) {
    for (auto& i : idx) i = static_cast<std::size_t>(uniform_below(eng, n));
    std::sort(idx.begin(), idx.end());
  } else {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  return idx;
}

}  // namespace detail

inline DecisionTree fit_regression_tree(const FeatureMatrix& x, std::span<const double> y, const TreeParams& p,
                                        std::uint64_t seed) {
  Engine eng(seed);
  auto idx = detail::sample_rows(x.rows, p.bootstrap, eng);
  detail::MseCriterion crit{y};
  return detail::TreeBuilder<detail::MseCriterion>(x, crit, p, eng).build(std::move(idx));
}

inline DecisionTree fit_classification_tree(const FeatureMatrix& x, std::span<const std::size_t> y,
                                            std::size_t classes, const TreeParams& p, std::uint64_t seed) {
  Engine eng(seed);
  auto idx = detail::sample_rows(x.rows, p.bootstrap, eng);
  detail::GiniCriterion crit{y, classes};
  return detail::TreeBuilder<detail::GiniCriterion>(x, crit, p, eng).build(std::move(idx));
}

struct Forest {
  std::vector<DecisionTree> trees;

  /// Mean of the trees' leaf values.
  std::vector<double> predict_mean(std::span<const double> x) const {
    std::vector<double> acc;
    for (const auto& t : trees) {
      const auto& v = t.predict(x);
      if (acc.empty()) acc.assign(v.size(), 0.0);
      for (std::size_t k = 0; k < v.size(); ++k) acc[k] += v[k];
    }
    for (auto& a : acc) a /= static_cast<double>(trees.size());
    return acc;
  }

  /// Hard majority vote; ties go to the lowest class index.
  std::size_t predict_vote(std::span<const double> x, std::size_t classes) const {
    std::vector<std::size_t> votes(classes, 0);
    for (const auto& t : trees) {
      const auto& v = t.predict(x);
      ++votes[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())];
    }
    return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
};

/// Tree i is grown from derive_seed(seed, i), so the forest does not depend
/// on how trees are scheduled across threads.
inline Forest fit_regression_forest(const FeatureMatrix& x, std::span<const double> y, const TreeParams& p,
                                    std::size_t n_trees, std::uint64_t seed) {
  Forest f;
  f.trees.resize(n_trees);
  parallel_for(n_trees, [&](std::size_t i) { f.trees[i] = fit_regression_tree(x, y, p, derive_seed(seed, i)); });
  return f;
}

inline Forest fit_classification_forest(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t classes,
                                        const TreeParams& p, std::size_t n_trees, std::uint64_t seed) {
  Forest f;
  f.trees.resize(n_trees);
  parallel_for(n_trees,
               [&](std::size_t i) { f.trees[i] = fit_classification_tree(x, y, classes, p, derive_seed(seed, i)); });
  return f;
}

inline nlohmann::json to_json(const DecisionTree& t) {
  nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                 left = nlohmann::json::array(), right = nlohmann::json::array(),
                 value = nlohmann::json::array(), gain = nlohmann::json::array();
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
    gain.push_back(n.gain);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left},
          {"right", right},     {"value", value},         {"gain", gain}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  const auto& f = j.at("feature");
  t.nodes.resize(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = f[i].get<int>();
    n.threshold = j.at("threshold")[i].get<double>();
    n.left = j.at("left")[i].get<int>();
    n.right = j.at("right")[i].get<int>();
    n.value = j.at("value")[i].get<std::vector<double>>();
    n.gain = j.at("gain")[i].get<double>();
    const int sz = static_cast<int>(f.size());
    if (n.feature >= 0 && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) || n.left >= sz || n.right >= sz))
      throw Error("malformed tree: bad child index at node " + std::to_string(i));
  }
  return t;
}

}  // namespace benloc
