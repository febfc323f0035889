#pragma once

// Configuration selectors: per-configuration regression forests, a
// best-configuration classification forest, k-nearest neighbours and a
// pairwise ranker. All of them end in an argmin/argmax over configurations
// whose ties resolve toward Default (configuration index 0).

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "benloc/metrics.hpp"
#include "benloc/splits.hpp"
#include "benloc/tree.hpp"

namespace benloc {

enum class ModelKind { reg_forest, clf_forest, knn, pair_ranker };

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::reg_forest: return "reg_forest";
    case ModelKind::clf_forest: return "clf_forest";
    case ModelKind::knn: return "knn";
    case ModelKind::pair_ranker: return "pair_ranker";
  }
  return "reg_forest";
}

inline ModelKind parse_model_kind(std::string_view s) {
  if (s == "reg_forest") return ModelKind::reg_forest;
  if (s == "clf_forest") return ModelKind::clf_forest;
  if (s == "knn") return ModelKind::knn;
  if (s == "pair_ranker") return ModelKind::pair_ranker;
  throw Error("unknown model kind '" + std::string(s) + "'");
}

struct Hyperparams {
  std::size_t n_trees = 200;
  int max_depth = 12;
  std::size_t min_samples_leaf = 1;
  std::size_t min_samples_split = 2;
  double max_features = 0.0;  // 0 -> sqrt(d)
  bool bootstrap = true;
  std::size_t k = 5;

  TreeParams tree_params() const {
    TreeParams p;
    p.max_depth = max_depth;
    p.min_samples_leaf = min_samples_leaf;
    p.min_samples_split = min_samples_split;
    p.max_features = max_features;
    p.bootstrap = bootstrap;
    return p;
  }

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

inline nlohmann::json to_json(const Hyperparams& h) {
  return {{"n_trees", h.n_trees},         {"max_depth", h.max_depth},       {"min_samples_leaf", h.min_samples_leaf},
          {"min_samples_split", h.min_samples_split}, {"max_features", h.max_features}, {"bootstrap", h.bootstrap},
          {"k", h.k}};
}

inline Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  Hyperparams h;
  h.n_trees = j.at("n_trees").get<std::size_t>();
  h.max_depth = j.at("max_depth").get<int>();
  h.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  h.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  h.max_features = j.at("max_features").get<double>();
  h.bootstrap = j.at("bootstrap").get<bool>();
  h.k = j.at("k").get<std::size_t>();
  return h;
}

/// Hex FNV-1a over the ordered feature names.
inline std::string feature_fingerprint(const std::vector<std::string>& names) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& n : names) {
    h = fnv1a(n, h);
    h = fnv1a("\x1f", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Examples
// ---------------------------------------------------------------------------

struct LabeledExample {
  InstanceKey key;
  std::vector<double> features;
  std::vector<double> labels;  // log-scaled time relative to Default, per configuration
  std::size_t best = 0;        // index of the fastest configuration
  std::vector<double> times;   // raw capped times, per configuration
};

struct ExampleSet {
  std::vector<std::string> feature_names;
  std::vector<ConfigId> configs;
  std::vector<LabeledExample> examples;

  std::string fingerprint() const { return feature_fingerprint(feature_names); }
  std::size_t dim() const { return feature_names.size(); }

  std::set<std::string> families() const {
    std::set<std::string> s;
    for (const auto& e : examples) s.insert(e.key.family);
    return s;
  }

  ExampleSet subset(const std::set<std::string>& fams) const {
    ExampleSet out{feature_names, configs, {}};
    for (const auto& e : examples)
      if (fams.count(e.key.family)) out.examples.push_back(e);
    return out;
  }

  std::vector<double> matrix() const {
    std::vector<double> m;
    m.reserve(examples.size() * dim());
    for (const auto& e : examples) m.insert(m.end(), e.features.begin(), e.features.end());
    return m;
  }
};

/// label(x, c) = ln((t(x, c) + shift) / (t(x, Default) + shift)), one row per
/// table instance, configurations in table order.
inline std::vector<std::vector<double>> make_labels(const PerfTable& t, double shift = kDefaultShift) {
  std::vector<std::vector<double>> out(t.num_instances());
  const std::size_t d = t.default_index();
  for (std::size_t i = 0; i < t.num_instances(); ++i) {
    out[i].resize(t.num_configs());
    const double base = t.time(i, d) + shift;
    for (std::size_t c = 0; c < t.num_configs(); ++c) out[i][c] = std::log((t.time(i, c) + shift) / base);
  }
  return out;
}

/// Declared test set. Training on any example it covers is rejected.
///
/// Family granularity is the normal mode. Instance granularity only rejects
/// exact (family, seed) matches; it exists for measuring what leakage
/// across permutations does to evaluation, and must be asked for by name.
class TestRegistry {
 public:
  enum class Granularity { family, instance };

  static TestRegistry families_of(const std::vector<InstanceKey>& test) {
    TestRegistry r;
    for (const auto& k : test) r.families_.insert(k.family);
    return r;
  }
  static TestRegistry allow_permutation_leakage(const std::vector<InstanceKey>& test) {
    TestRegistry r;
    r.granularity_ = Granularity::instance;
    r.instances_.insert(test.begin(), test.end());
    return r;
  }
  static TestRegistry none() { return {}; }

  Granularity granularity() const noexcept { return granularity_; }

  void check(const ExampleSet& train) const {
    for (const auto& e : train.examples) {
      if (granularity_ == Granularity::family && families_.count(e.key.family))
        throw LeakageError("training example " + e.key.to_string() + " belongs to test family '" + e.key.family + "'");
      if (granularity_ == Granularity::instance && instances_.count(e.key))
        throw LeakageError("training example " + e.key.to_string() + " is a declared test instance");
    }
  }

 private:
  Granularity granularity_ = Granularity::family;
  std::set<std::string> families_;
  std::set<InstanceKey> instances_;
};

// ---------------------------------------------------------------------------
// Trained model
// ---------------------------------------------------------------------------

struct KnnModel {
  std::size_t k = 5;
  std::vector<double> mean;
  std::vector<double> scale;
  std::vector<double> points;  // standardized, row-major
  std::vector<std::size_t> classes;
};

/// Argmin with ties to the lowest index.
inline std::size_t select_argmin(std::span<const double> scores) {
  return static_cast<std::size_t>(std::min_element(scores.begin(), scores.end()) - scores.begin());
}

class TrainedSelector {
 public:
  ModelKind kind = ModelKind::reg_forest;
  Hyperparams hyperparams;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::vector<std::string> feature_names;
  std::vector<ConfigId> configs;
  std::vector<Forest> forests;
  KnnModel knn;

  std::size_t num_configs() const { return configs.size(); }

  std::vector<std::pair<std::size_t, std::size_t>> config_pairs() const {
    std::vector<std::pair<std::size_t, std::size_t>> p;
    for (std::size_t a = 0; a < configs.size(); ++a)
      for (std::size_t b = a + 1; b < configs.size(); ++b) p.push_back({a, b});
    return p;
  }

  /// Per-configuration predicted labels (reg_forest only).
  std::vector<double> predict_scores(std::span<const double> x) const {
    if (kind != ModelKind::reg_forest) throw UnsupportedModelError("scores are only defined for reg_forest");
    std::vector<double> s(configs.size());
    for (std::size_t c = 0; c < configs.size(); ++c) s[c] = forests[c].predict_mean(x)[0];
    return s;
  }

  std::size_t predict_index(std::span<const double> x) const {
    if (x.size() != feature_names.size()) throw Error("feature vector has wrong length");
    switch (kind) {
      case ModelKind::reg_forest: return select_argmin(predict_scores(x));
      case ModelKind::clf_forest: return forests.front().predict_vote(x, configs.size());
      case ModelKind::knn: return predict_knn(x);
      case ModelKind::pair_ranker: return predict_ranker(x);
    }
    return 0;
  }

  /// Predicted configuration; `features_fingerprint` must match training.
  ConfigId predict_config(std::string_view features_fingerprint, std::span<const double> x) const {
    if (features_fingerprint != fingerprint)
      throw FingerprintMismatchError("feature order " + std::string(features_fingerprint) +
                                     " does not match model fingerprint " + fingerprint);
    return configs[predict_index(x)];
  }

 private:
  std::size_t predict_knn(std::span<const double> x) const {
    const std::size_t d = feature_names.size(), n = knn.classes.size();
    std::vector<double> z(d);
    for (std::size_t j = 0; j < d; ++j) z[j] = (x[j] - knn.mean[j]) / knn.scale[j];
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = knn.points[i * d + j] - z[j];
        acc += diff * diff;
      }
      dist[i] = {acc, i};
    }
    const std::size_t k = std::min(knn.k, n);
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    std::vector<std::size_t> votes(configs.size(), 0);
    for (std::size_t i = 0; i < k; ++i) ++votes[knn.classes[dist[i].second]];
    return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }

  // Copeland: wins minus losses over all predicted pairwise comparisons.
  std::size_t predict_ranker(std::span<const double> x) const {
    const auto pairs = config_pairs();
    std::vector<double> row(x.begin(), x.end());
    row.resize(x.size() + pairs.size(), 0.0);
    std::vector<int> score(configs.size(), 0);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      std::fill(row.begin() + static_cast<std::ptrdiff_t>(x.size()), row.end(), 0.0);
      row[x.size() + p] = 1.0;
      const bool first_wins = forests.front().predict_vote(row, 2) == 1;
      const auto [a, b] = pairs[p];
      score[a] += first_wins ? 1 : -1;
      score[b] += first_wins ? -1 : 1;
    }
    return static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  }
};

/// Trains one selector. `registry` is checked before anything else.
inline TrainedSelector train(ModelKind kind, const ExampleSet& examples, const Hyperparams& hp, std::uint64_t seed,
                             const TestRegistry& registry) {
  registry.check(examples);
  if (examples.examples.size() < 2) throw Error("training needs at least 2 examples");
  if (examples.configs.empty()) throw Error("training needs at least one configuration");
  const std::size_t d = examples.dim(), n = examples.examples.size(), nc = examples.configs.size();
  for (const auto& e : examples.examples)
    if (e.features.size() != d || e.labels.size() != nc) throw Error("inconsistent example dimensions");

  TrainedSelector m;
  m.kind = kind;
  m.hyperparams = hp;
  m.seed = seed;
  m.fingerprint = examples.fingerprint();
  m.feature_names = examples.feature_names;
  m.configs = examples.configs;

  const auto data = examples.matrix();
  const FeatureMatrix x{data, n, d};
  const TreeParams tp = hp.tree_params();

  switch (kind) {
    case ModelKind::reg_forest: {
      m.forests.resize(nc);
      for (std::size_t c = 0; c < nc; ++c) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = examples.examples[i].labels[c];
        m.forests[c] = fit_regression_forest(x, y, tp, hp.n_trees, derive_seed(seed, c));
      }
      break;
    }
    case ModelKind::clf_forest: {
      std::vector<std::size_t> y(n);
      for (std::size_t i = 0; i < n; ++i) y[i] = examples.examples[i].best;
      m.forests.push_back(fit_classification_forest(x, y, nc, tp, hp.n_trees, seed));
      break;
    }
    case ModelKind::knn: {
      m.knn.k = std::max<std::size_t>(1, hp.k);
      m.knn.mean.assign(d, 0.0);
      m.knn.scale.assign(d, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m.knn.mean[j] += x.at(i, j) / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = x.at(i, j) - m.knn.mean[j];
          m.knn.scale[j] += diff * diff / static_cast<double>(n);
        }
      for (auto& s : m.knn.scale) s = s > 0.0 ? std::sqrt(s) : 1.0;
      m.knn.points.resize(n * d);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) m.knn.points[i * d + j] = (x.at(i, j) - m.knn.mean[j]) / m.knn.scale[j];
      for (const auto& e : examples.examples) m.knn.classes.push_back(e.best);
      break;
    }
    case ModelKind::pair_ranker: {
      // One row per (example, configuration pair): features plus a one-hot
      // pair indicator; class 1 when the first configuration is strictly better.
      const auto pairs = m.config_pairs();
      const std::size_t dp = d + pairs.size();
      std::vector<double> rows;
      std::vector<std::size_t> y;
      rows.reserve(n * pairs.size() * dp);
      for (const auto& e : examples.examples) {
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          rows.insert(rows.end(), e.features.begin(), e.features.end());
          for (std::size_t q = 0; q < pairs.size(); ++q) rows.push_back(q == p ? 1.0 : 0.0);
          y.push_back(e.labels[pairs[p].first] < e.labels[pairs[p].second] ? 1 : 0);
        }
      }
      const FeatureMatrix xp{rows, y.size(), dp};
      m.forests.push_back(fit_classification_forest(xp, y, 2, tp, hp.n_trees, seed));
      break;
    }
  }
  return m;
}

/// Mean decrease in impurity, averaged over every tree of the model and
/// normalised to sum 1. Sorted by importance, ties in column order.
inline std::vector<std::pair<std::string, double>> feature_importance(const TrainedSelector& m) {
  if (m.kind == ModelKind::knn) throw UnsupportedModelError("feature importance needs a tree-based model");
  std::vector<std::string> names = m.feature_names;
  if (m.kind == ModelKind::pair_ranker)
    for (const auto& [a, b] : m.config_pairs())
      names.push_back("pair:" + m.configs[a].to_string() + "|" + m.configs[b].to_string());
  std::vector<double> imp(names.size(), 0.0);
  for (const auto& f : m.forests)
    for (const auto& t : f.trees) {
      const auto ti = t.importances(names.size());
      for (std::size_t j = 0; j < ti.size(); ++j) imp[j] += ti[j];
    }
  const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
  if (total > 0.0)
    for (auto& v : imp) v /= total;
  std::vector<std::size_t> order(names.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return imp[a] > imp[b]; });
  std::vector<std::pair<std::string, double>> out;
  for (auto j : order) out.push_back({names[j], imp[j]});
  return out;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline constexpr int kSelectorFormatVersion = 1;

inline nlohmann::json to_json(const TrainedSelector& m) {
  nlohmann::json j;
  j["format"] = "benloc-selector";
  j["version"] = kSelectorFormatVersion;
  j["kind"] = std::string(to_string(m.kind));
  j["seed"] = m.seed;
  j["fingerprint"] = m.fingerprint;
  j["feature_names"] = m.feature_names;
  j["configs"] = nlohmann::json::array();
  for (const auto& c : m.configs) j["configs"].push_back(c.to_string());
  j["hyperparams"] = to_json(m.hyperparams);
  j["forests"] = nlohmann::json::array();
  for (const auto& f : m.forests) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : f.trees) trees.push_back(to_json(t));
    j["forests"].push_back(trees);
  }
  if (m.kind == ModelKind::knn)
    j["knn"] = {{"k", m.knn.k},
                {"mean", m.knn.mean},
                {"scale", m.knn.scale},
                {"points", m.knn.points},
                {"classes", m.knn.classes}};
  return j;
}

inline TrainedSelector selector_from_json(const nlohmann::json& j) {
  if (j.at("format") != "benloc-selector") throw Error("not a selector file");
  if (j.at("version").get<int>() != kSelectorFormatVersion) throw Error("unsupported selector version");
  TrainedSelector m;
  m.kind = parse_model_kind(j.at("kind").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.fingerprint = j.at("fingerprint").get<std::string>();
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  if (feature_fingerprint(m.feature_names) != m.fingerprint) throw Error("selector fingerprint is inconsistent");
  for (const auto& c : j.at("configs")) m.configs.push_back(ConfigId::parse(c.get<std::string>()));
  m.hyperparams = hyperparams_from_json(j.at("hyperparams"));
  for (const auto& jf : j.at("forests")) {
    Forest f;
    for (const auto& jt : jf) f.trees.push_back(tree_from_json(jt));
    m.forests.push_back(std::move(f));
  }
  if (m.kind == ModelKind::knn) {
    const auto& k = j.at("knn");
    m.knn.k = k.at("k").get<std::size_t>();
    m.knn.mean = k.at("mean").get<std::vector<double>>();
    m.knn.scale = k.at("scale").get<std::vector<double>>();
    m.knn.points = k.at("points").get<std::vector<double>>();
    m.knn.classes = k.at("classes").get<std::vector<std::size_t>>();
  }
  return m;
}

// ---------------------------------------------------------------------------
// Hyperparameter search
// ---------------------------------------------------------------------------

struct SearchSpace {
  std::pair<std::size_t, std::size_t> n_trees{50, 300};
  std::pair<int, int> max_depth{4, 16};
  std::pair<std::size_t, std::size_t> min_samples_leaf{1, 8};
  std::pair<double, double> max_features{0.1, 1.0};
  std::pair<std::size_t, std::size_t> k{1, 15};
};

struct SearchTrial {
  Hyperparams params;
  double validation_geomean = 0.0;
};

struct SearchResult {
  Hyperparams best;
  double best_geomean = kInf;
  std::vector<SearchTrial> trials;
};

/// Selected time for every example; `selected[i]` indexes its configurations.
inline double selected_geomean(const ExampleSet& set, const std::vector<std::size_t>& selected, double shift) {
  std::vector<double> t;
  for (std::size_t i = 0; i < set.examples.size(); ++i) t.push_back(set.examples[i].times[selected[i]]);
  return shifted_geomean(t, shift);
}

/// Random search. Candidates are drawn in sequence from one stream seeded by
/// `seed`, so a larger budget extends a smaller one. Each candidate is scored
/// by the shifted geomean of its picks on a fixed family-level validation
/// split of `examples`.
inline SearchResult random_search(ModelKind kind, const ExampleSet& examples, const SearchSpace& space,
                                  std::size_t budget, std::uint64_t seed, double shift = kDefaultShift) {
  if (budget < 1) throw Error("random search needs a budget of at least 1");
  DatasetManifest inner;
  for (const auto& fam : examples.families()) inner.families.push_back({fam, {}});
  for (const auto& e : examples.examples)
    for (auto& f : inner.families)
      if (f.id == e.key.family) f.instances.push_back({e.key.seed, ""});
  const auto split = split_by_instance(inner, kDefaultTestFraction, derive_seed(seed, 0x5EA4C4));
  const auto val_fams = split.test_families();
  std::set<std::string> train_fams = split.train_families();
  const ExampleSet train_set = examples.subset(train_fams);
  const ExampleSet val_set = examples.subset(val_fams);
  const auto registry = TestRegistry::families_of(split.test);

  Engine eng(seed);
  auto draw = [&](auto lo, auto hi) {
    using T = decltype(lo);
    return static_cast<T>(lo + static_cast<T>(uniform_below(eng, static_cast<std::uint64_t>(hi - lo) + 1)));
  };
  SearchResult result;
  for (std::size_t b = 0; b < budget; ++b) {
    Hyperparams hp;
    hp.n_trees = draw(space.n_trees.first, space.n_trees.second);
    hp.max_depth = draw(space.max_depth.first, space.max_depth.second);
    hp.min_samples_leaf = draw(space.min_samples_leaf.first, space.min_samples_leaf.second);
    hp.max_features = space.max_features.first + uniform01(eng) * (space.max_features.second - space.max_features.first);
    hp.k = draw(space.k.first, space.k.second);

    const auto model = train(kind, train_set, hp, derive_seed(seed, b + 1), registry);
    std::vector<std::size_t> picks;
    for (const auto& e : val_set.examples) picks.push_back(model.predict_index(e.features));
    const double g = selected_geomean(val_set, picks, shift);
    result.trials.push_back({hp, g});
    if (g < result.best_geomean) {
      result.best_geomean = g;
      result.best = hp;
    }
  }
  return result;
}

}  // namespace benloc
