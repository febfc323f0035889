#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace benloc;

namespace {

const ConfigId kA(Param::RootCutLevel, 3);
const ConfigId kB(Param::TreeCutLevel, 1);

// Examples from explicit features and per-configuration times, labels
// computed here from the definition.
ExampleSet make_set(const std::vector<std::vector<double>>& x, const std::vector<std::vector<double>>& times,
                    std::vector<ConfigId> configs, double shift = kDefaultShift) {
  ExampleSet s;
  for (std::size_t j = 0; j < x.front().size(); ++j) s.feature_names.push_back("f" + std::to_string(j));
  s.configs = std::move(configs);
  for (std::size_t i = 0; i < x.size(); ++i) {
    LabeledExample e;
    e.key = {"fam" + std::to_string(i / 2), i % 2};
    e.features = x[i];
    e.times = times[i];
    for (double t : times[i]) e.labels.push_back(std::log((t + shift) / (times[i][0] + shift)));
    e.best = static_cast<std::size_t>(std::min_element(times[i].begin(), times[i].end()) - times[i].begin());
    s.examples.push_back(e);
  }
  return s;
}

// Feature 0 > 0 makes kA fastest, otherwise kB; feature 1 is noise.
ExampleSet planted_set(std::uint64_t seed, std::size_t n) {
  Engine eng(seed);
  std::vector<std::vector<double>> x, t;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = 2.0 * uniform01(eng) - 1.0;
    x.push_back({f, uniform01(eng)});
    t.push_back(f > 0 ? std::vector<double>{100, 40, 120} : std::vector<double>{100, 130, 60});
  }
  return make_set(x, t, {ConfigId{}, kA, kB});
}

Hyperparams small(std::size_t trees = 30) {
  Hyperparams h;
  h.n_trees = trees;
  return h;
}

}  // namespace

TEST(MakeLabels, Definition) {
  std::vector<PerfRecord> recs{{{"f", 0}, ConfigId{}, 6, SolveStatus::optimal}, {{"f", 0}, kA, 12, SolveStatus::optimal},
                               {{"f", 1}, ConfigId{}, 5, SolveStatus::optimal}, {{"f", 1}, kA, 10, SolveStatus::optimal}};
  const PerfTable t(recs);
  const auto l10 = make_labels(t, 10);
  EXPECT_EQ(l10[0][0], 0.0);
  EXPECT_NEAR(l10[0][1], std::log(22.0 / 16.0), 1e-15);
  EXPECT_NEAR(l10[0][1], 0.3185, 5e-5);
  const auto l0 = make_labels(t, 0);
  EXPECT_NEAR(l0[1][1], std::log(2.0), 1e-15);
}

TEST(Train, ConstantLabelsGiveConstantPredictionAndDefault) {
  std::vector<std::vector<double>> x, t;
  for (int i = 0; i < 12; ++i) {
    x.push_back({static_cast<double>(i), static_cast<double>(i % 3)});
    t.push_back({50, 50, 50});
  }
  const auto set = make_set(x, t, {ConfigId{}, kA, kB});
  const auto m = train(ModelKind::reg_forest, set, small(), 1, TestRegistry::none());
  for (double v : {-5.0, 3.0, 40.0}) {
    const std::vector<double> q{v, 1.0};
    for (double s : m.predict_scores(q)) EXPECT_EQ(s, 0.0);
    EXPECT_TRUE(m.predict_config(set.fingerprint(), q).is_default());
  }
  for (const auto& [name, imp] : feature_importance(m)) EXPECT_EQ(imp, 0.0);
}

TEST(Train, ConstantNonZeroLabel) {
  std::vector<std::vector<double>> x, t;
  for (int i = 0; i < 10; ++i) {
    x.push_back({static_cast<double>(i)});
    t.push_back({10, 30});
  }
  const auto set = make_set(x, t, {ConfigId{}, kA});
  const auto m = train(ModelKind::reg_forest, set, small(), 2, TestRegistry::none());
  EXPECT_NEAR(m.predict_scores(std::vector<double>{4.5})[1], std::log(40.0 / 20.0), 1e-12);
}

TEST(Train, ClassifierLearnsPlantedRule) {
  const auto train_set = planted_set(1, 200), held_out = planted_set(2, 200);
  for (auto kind : {ModelKind::clf_forest, ModelKind::reg_forest, ModelKind::pair_ranker}) {
    SCOPED_TRACE(std::string(to_string(kind)));
    const auto m = train(kind, train_set, small(), 3, TestRegistry::none());
    std::size_t correct = 0, total = 0;
    for (const auto& e : held_out.examples) {
      if (std::abs(e.features[0]) < 0.02) continue;  // too close to the boundary for 200 samples
      ++total;
      correct += m.predict_index(e.features) == e.best;
    }
    EXPECT_EQ(correct, total);
  }
}

TEST(Train, KnnMemorizesWithKOne) {
  const auto set = planted_set(4, 60);
  Hyperparams h;
  h.k = 1;
  const auto m = train(ModelKind::knn, set, h, 0, TestRegistry::none());
  for (const auto& e : set.examples) EXPECT_EQ(m.predict_index(e.features), e.best);
  EXPECT_THROW(feature_importance(m), UnsupportedModelError);
}

TEST(Train, KnnMajorityTieGoesToLowestIndex) {
  const auto set = make_set({{0.0}, {1.0}}, {{10, 5}, {5, 10}}, {ConfigId{}, kA});
  Hyperparams h;
  h.k = 2;
  const auto m = train(ModelKind::knn, set, h, 0, TestRegistry::none());
  EXPECT_EQ(m.predict_index(std::vector<double>{0.5}), 0u);
}

TEST(Train, RankerOnTwoConfigsIsSignClassifier) {
  const auto base = planted_set(5, 150);
  ExampleSet two{base.feature_names, {ConfigId{}, kA}, {}};
  for (auto e : base.examples) {
    e.labels.resize(2);
    e.times.resize(2);
    e.best = e.times[1] < e.times[0] ? 1 : 0;
    two.examples.push_back(e);
  }
  const auto ranker = train(ModelKind::pair_ranker, two, small(), 6, TestRegistry::none());
  const auto clf = train(ModelKind::clf_forest, two, small(), 6, TestRegistry::none());
  for (const auto& e : planted_set(7, 100).examples) {
    if (std::abs(e.features[0]) < 0.02) continue;
    const std::size_t sign = e.features[0] > 0 ? 1 : 0;
    EXPECT_EQ(ranker.predict_index(e.features), sign);
    EXPECT_EQ(clf.predict_index(e.features), sign);
  }
}

TEST(Train, DeterministicAcrossThreadCounts) {
  const auto set = planted_set(8, 80);
  for (auto kind : {ModelKind::reg_forest, ModelKind::clf_forest, ModelKind::knn, ModelKind::pair_ranker}) {
    setenv("BENLOC_THREADS", "1", 1);
    const auto a = to_json(train(kind, set, small(20), 11, TestRegistry::none())).dump();
    setenv("BENLOC_THREADS", "3", 1);
    const auto b = to_json(train(kind, set, small(20), 11, TestRegistry::none())).dump();
    unsetenv("BENLOC_THREADS");
    EXPECT_EQ(a, b) << to_string(kind);
  }
  EXPECT_NE(to_json(train(ModelKind::reg_forest, set, small(20), 1, TestRegistry::none())).dump(),
            to_json(train(ModelKind::reg_forest, set, small(20), 2, TestRegistry::none())).dump());
}

TEST(Train, RejectsTooFewExamplesAndBadShapes) {
  const auto one = make_set({{1.0}}, {{1, 2}}, {ConfigId{}, kA});
  EXPECT_THROW(train(ModelKind::reg_forest, one, small(), 0, TestRegistry::none()), Error);
  auto bad = planted_set(1, 10);
  bad.examples[3].features.pop_back();
  EXPECT_THROW(train(ModelKind::reg_forest, bad, small(), 0, TestRegistry::none()), Error);
}

TEST(Tree, DepthOneLeafMeansMatchBruteForce) {
  Engine eng(13);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n = 5 + uniform_below(eng, 30);
    std::vector<double> x(n), y(n);
    for (auto& v : x) v = std::round(20 * uniform01(eng));
    for (auto& v : y) v = standard_normal(eng);
    TreeParams p;
    p.max_depth = 1;
    p.bootstrap = false;
    p.max_features = 1.0;
    const auto tree = fit_regression_tree({x, n, 1}, y, p, 0);

    std::vector<double> xs = x;
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    double best_sse = kInf, best_thr = 0;
    for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
      const double thr = 0.5 * (xs[k] + xs[k + 1]);
      double sl = 0, sr = 0, nl = 0, nr = 0;
      for (std::size_t i = 0; i < n; ++i) (x[i] <= thr ? (sl += y[i], nl += 1) : (sr += y[i], nr += 1));
      double sse = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double mu = x[i] <= thr ? sl / nl : sr / nr;
        sse += (y[i] - mu) * (y[i] - mu);
      }
      if (sse < best_sse - 1e-9) best_sse = sse, best_thr = thr;
    }
    if (xs.size() < 2) {
      EXPECT_EQ(tree.nodes.size(), 1u);
      continue;
    }
    ASSERT_EQ(tree.nodes.size(), 3u);
    EXPECT_EQ(tree.nodes[0].threshold, best_thr);
    double sl = 0, sr = 0, nl = 0, nr = 0;
    for (std::size_t i = 0; i < n; ++i) (x[i] <= best_thr ? (sl += y[i], nl += 1) : (sr += y[i], nr += 1));
    EXPECT_NEAR(tree.nodes[static_cast<std::size_t>(tree.nodes[0].left)].value[0], sl / nl, 1e-12);
    EXPECT_NEAR(tree.nodes[static_cast<std::size_t>(tree.nodes[0].right)].value[0], sr / nr, 1e-12);
  }
}

TEST(Tree, WellFormed) {
  const auto set = planted_set(3, 100);
  const auto m = train(ModelKind::reg_forest, set, small(10), 5, TestRegistry::none());
  for (const auto& f : m.forests)
    for (const auto& t : f.trees) {
      std::vector<int> parents(t.nodes.size(), 0);
      for (const auto& node : t.nodes) {
        if (node.feature < 0) continue;
        ASSERT_GT(node.left, 0);
        ASSERT_GT(node.right, 0);
        ++parents[static_cast<std::size_t>(node.left)];
        ++parents[static_cast<std::size_t>(node.right)];
      }
      EXPECT_EQ(parents[0], 0);
      for (std::size_t i = 1; i < parents.size(); ++i) EXPECT_EQ(parents[i], 1);
    }
}

TEST(Select, ArgminInvariantUnderCommonShift) {
  Engine eng(21);
  for (int k = 0; k < 500; ++k) {
    std::vector<double> s(1 + uniform_below(eng, 10));
    for (auto& v : s) v = std::round(10 * standard_normal(eng)) / 4;
    const auto i = select_argmin(s);
    const double c = 8.0 * standard_normal(eng);
    for (auto& v : s) v += c;
    EXPECT_EQ(select_argmin(s), i);
  }
  EXPECT_EQ(select_argmin(std::vector<double>{1, 1, 1}), 0u);
}

TEST(Importance, PlantedFeatureFirstAndSumsToOne) {
  const auto set = planted_set(9, 200);
  for (auto kind : {ModelKind::reg_forest, ModelKind::clf_forest, ModelKind::pair_ranker}) {
    const auto m = train(kind, set, small(), 4, TestRegistry::none());
    const auto imp = feature_importance(m);
    double sum = 0;
    for (const auto& [n, v] : imp) {
      EXPECT_GE(v, 0.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
    EXPECT_EQ(imp.front().first, "f0") << to_string(kind);
  }
}

TEST(Fingerprint, MismatchRejected) {
  const auto set = planted_set(1, 20);
  const auto m = train(ModelKind::clf_forest, set, small(5), 0, TestRegistry::none());
  EXPECT_EQ(m.fingerprint, feature_fingerprint({"f0", "f1"}));
  EXPECT_THROW(m.predict_config(feature_fingerprint({"f1", "f0"}), std::vector<double>{0, 0}), FingerprintMismatchError);
  EXPECT_NE(feature_fingerprint({"ab", "c"}), feature_fingerprint({"a", "bc"}));
  EXPECT_EQ(feature_fingerprint({"x"}).size(), 16u);
}

TEST(Registry, FamilyLeakageIsHardError) {
  const auto set = planted_set(1, 20);
  const std::vector<InstanceKey> test{{"fam3", 0}};
  EXPECT_THROW(train(ModelKind::reg_forest, set, small(5), 0, TestRegistry::families_of(test)), LeakageError);
  EXPECT_NO_THROW(train(ModelKind::reg_forest, set.subset({"fam0", "fam1", "fam2"}), small(5), 0,
                        TestRegistry::families_of(test)));
  // instance granularity tolerates other permutations of a test family
  const std::vector<InstanceKey> one{{"fam3", 7}};
  EXPECT_NO_THROW(train(ModelKind::reg_forest, set, small(5), 0, TestRegistry::allow_permutation_leakage(one)));
  const std::vector<InstanceKey> exact{{"fam3", 1}};
  EXPECT_THROW(train(ModelKind::reg_forest, set, small(5), 0, TestRegistry::allow_permutation_leakage(exact)),
               LeakageError);
}

TEST(Serialization, RoundTripPreservesPredictions) {
  const auto set = planted_set(2, 60);
  const auto probe = planted_set(3, 40);
  for (auto kind : {ModelKind::reg_forest, ModelKind::clf_forest, ModelKind::knn, ModelKind::pair_ranker}) {
    const auto m = train(kind, set, small(10), 1, TestRegistry::none());
    const auto j = to_json(m);
    const auto back = selector_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(to_json(back).dump(), j.dump());
    for (const auto& e : probe.examples) EXPECT_EQ(back.predict_index(e.features), m.predict_index(e.features));
  }
  auto j = to_json(train(ModelKind::knn, set, small(1), 1, TestRegistry::none()));
  j["version"] = 99;
  EXPECT_THROW(selector_from_json(j), Error);
}

TEST(Hyperparams, DefaultsAndJson) {
  const Hyperparams h;
  EXPECT_EQ(h.n_trees, 200u);
  EXPECT_EQ(h.max_depth, 12);
  EXPECT_EQ(h.tree_params().features_per_split(25), 5u);
  EXPECT_TRUE(h.bootstrap);
  EXPECT_EQ(hyperparams_from_json(to_json(h)), h);
  for (auto k : {ModelKind::reg_forest, ModelKind::clf_forest, ModelKind::knn, ModelKind::pair_ranker})
    EXPECT_EQ(parse_model_kind(to_string(k)), k);
}

TEST(RandomSearch, BudgetOneAndDeterminism) {
  auto set = planted_set(10, 80);
  for (std::size_t i = 0; i < set.examples.size(); ++i) set.examples[i].key = {"fam" + std::to_string(i / 4), i % 4};
  SearchSpace space;
  space.n_trees = {5, 20};
  const auto one = random_search(ModelKind::reg_forest, set, space, 1, 42);
  ASSERT_EQ(one.trials.size(), 1u);
  EXPECT_EQ(one.best, one.trials[0].params);
  const auto again = random_search(ModelKind::reg_forest, set, space, 1, 42);
  EXPECT_EQ(again.best, one.best);
  EXPECT_EQ(again.best_geomean, one.best_geomean);
  EXPECT_THROW(random_search(ModelKind::reg_forest, set, space, 0, 42), Error);
}

TEST(RandomSearch, LargerBudgetExtendsStreamAndNeverWorsens) {
  SynthDatasetSpec spec;
  spec.families = 15;
  spec.permutations = 4;
  spec.seed = 3;
  const auto ds = build_synth_dataset(spec);
  const auto rows = feature_table(ds);
  const auto set = build_examples(rows, ds.table, FeatureStage::StaticOnly, ds.table.instances(), kDefaultShift);
  SearchSpace space;
  space.n_trees = {5, 15};
  const auto one = random_search(ModelKind::reg_forest, set, space, 1, 5);
  const auto many = random_search(ModelKind::reg_forest, set, space, 6, 5);
  ASSERT_EQ(many.trials.size(), 6u);
  EXPECT_EQ(many.trials[0].params, one.trials[0].params);
  EXPECT_EQ(many.trials[0].validation_geomean, one.trials[0].validation_geomean);
  EXPECT_LE(many.best_geomean, one.best_geomean);
  double running = kInf;
  for (const auto& t : many.trials) running = std::min(running, t.validation_geomean);
  EXPECT_EQ(many.best_geomean, running);
}
