#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace benloc;

namespace {

DatasetManifest grid(std::size_t families, std::size_t seeds) {
  DatasetManifest m;
  m.name = "grid";
  for (std::size_t f = 0; f < families; ++f) {
    Family fam{"fam" + std::to_string(f), {}};
    for (std::size_t s = 0; s < seeds; ++s) fam.instances.push_back({s, ""});
    m.families.push_back(fam);
  }
  return m;
}

void expect_partition(const DatasetManifest& m, const SplitAssignment& s) {
  std::set<InstanceKey> train(s.train.begin(), s.train.end()), test(s.test.begin(), s.test.end());
  EXPECT_EQ(train.size(), s.train.size());
  EXPECT_EQ(test.size(), s.test.size());
  for (const auto& k : test) EXPECT_FALSE(train.count(k));
  std::set<InstanceKey> all(train);
  all.insert(test.begin(), test.end());
  const auto keys = m.keys();
  EXPECT_EQ(all, std::set<InstanceKey>(keys.begin(), keys.end()));
}

}  // namespace

TEST(SplitByInstance, ExactDivision) {
  const auto m = grid(10, 10);
  const auto s = split_by_instance(m, 0.2, 7);
  EXPECT_EQ(s.test_families().size(), 2u);
  EXPECT_EQ(s.test.size(), 20u);
  EXPECT_EQ(s.family_overlap(), 0u);
  EXPECT_EQ(s.leakage(), 0.0);
  expect_partition(m, s);
}

TEST(SplitByInstance, NeverOverlapsAndStaysNearTarget) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const std::size_t nf = 2 + seed % 17;
    const auto m = grid(nf, 1 + seed % 5);
    const double frac = 0.1 + 0.8 * static_cast<double>(seed % 7) / 7.0;
    const auto s = split_by_instance(m, frac, seed);
    EXPECT_EQ(s.family_overlap(), 0u);
    expect_partition(m, s);
    EXPECT_LE(std::abs(static_cast<double>(s.test_families().size()) - frac * static_cast<double>(nf)), 1.0);
  }
}

TEST(SplitByInstance, Deterministic) {
  const auto m = grid(12, 4);
  EXPECT_EQ(to_json(split_by_instance(m, 0.25, 99)).dump(), to_json(split_by_instance(m, 0.25, 99)).dump());
  EXPECT_NE(to_json(split_by_instance(m, 0.25, 1)).dump(), to_json(split_by_instance(m, 0.25, 2)).dump());
}

TEST(SplitByInstance, Errors) {
  EXPECT_THROW(split_by_instance(grid(1, 10), 0.2, 0), Error);
  EXPECT_THROW(split_by_instance(grid(5, 2), 0.0, 0), Error);
  EXPECT_THROW(split_by_instance(grid(5, 2), 1.0, 0), Error);
}

TEST(SplitByPermutation, CountsAndLeakage) {
  const auto m = grid(10, 10);
  const auto s = split_by_permutation(m, 0.2, 3);
  EXPECT_EQ(s.test.size(), 20u);
  expect_partition(m, s);
  EXPECT_GT(s.family_overlap(), 0u);
  // independent count of test pairs whose family has a training member
  std::size_t leaked = 0;
  for (const auto& k : s.test)
    leaked += std::any_of(s.train.begin(), s.train.end(), [&](const InstanceKey& t) { return t.family == k.family; });
  EXPECT_EQ(s.leakage(), static_cast<double>(leaked) / 20.0);
  EXPECT_GE(s.leakage(), 0.95);
}

TEST(SplitByPermutation, MeanLeakageNearOne) {
  const auto m = grid(10, 10);
  double acc = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) acc += split_by_permutation(m, 0.2, seed).leakage();
  EXPECT_GT(acc / 100.0, 0.99);
}

TEST(SplitJson, RoundTrip) {
  const auto s = split_by_permutation(grid(6, 3), 0.3, 5);
  const auto back = split_from_json(to_json(s));
  EXPECT_EQ(back.train, s.train);
  EXPECT_EQ(back.test, s.test);
  EXPECT_EQ(back.strategy, s.strategy);
  EXPECT_EQ(back.seed, s.seed);
}

TEST(Manifest, JsonAndValidation) {
  auto m = grid(3, 2);
  m.perf_table = "perf.csv";
  const auto back = manifest_from_json(to_json(m));
  EXPECT_EQ(back.keys(), m.keys());
  EXPECT_EQ(back.perf_table, "perf.csv");
  EXPECT_NO_THROW(m.validate());
  m.families[1].instances.push_back({0, ""});
  EXPECT_THROW(m.validate(), Error);
  auto dup = grid(2, 1);
  dup.families[1].id = dup.families[0].id;
  EXPECT_THROW(dup.validate(), Error);
  auto files = grid(1, 1);
  files.families[0].instances[0].path = "nope.mps";
  EXPECT_THROW(files.validate_files(testutil::fixture("mps")), Error);
  files.families[0].instances[0].path = "tiny_cover.mps";
  EXPECT_NO_THROW(files.validate_files(testutil::fixture("mps")));
}

TEST(StratifiedSplit, SingleStratumMatchesFamilyCount) {
  const auto m = grid(10, 3);
  std::vector<PerfRecord> recs;
  for (const auto& k : m.keys()) recs.push_back({k, ConfigId{}, 10, SolveStatus::optimal});
  const PerfTable t(recs);
  const auto s = stratified_split(m, &t, 0.2, 4);
  EXPECT_EQ(s.test_families().size(), 2u);
  EXPECT_EQ(s.family_overlap(), 0u);
  expect_partition(m, s);
}

TEST(StratifiedSplit, TwoEqualStrata) {
  const auto m = grid(4, 2);
  const ConfigId o(Param::RootCutLevel, 2);
  std::vector<PerfRecord> recs;
  for (const auto& k : m.keys()) {
    const bool first = k.family == "fam0" || k.family == "fam1";
    recs.push_back({k, ConfigId{}, first ? 10.0 : 100.0, SolveStatus::optimal});
    recs.push_back({k, o, first ? 20.0 : 50.0, SolveStatus::optimal});
  }
  const PerfTable t(recs);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto s = stratified_split(m, &t, 0.5, seed);
    const auto tf = s.test_families();
    ASSERT_EQ(tf.size(), 2u);
    EXPECT_EQ(tf.count("fam0") + tf.count("fam1"), 1u);
    EXPECT_EQ(tf.count("fam2") + tf.count("fam3"), 1u);
  }
}

TEST(StratifiedSplit, NeedsTable) { EXPECT_THROW(stratified_split(grid(4, 2), nullptr, 0.2, 0), Error); }

TEST(StratifiedSplit, OracleLabelProportions) {
  SynthDatasetSpec spec;
  spec.families = 50;
  spec.permutations = 4;
  spec.seed = 21;
  const auto ds = build_synth_dataset(spec);
  const auto pi = pi_best(ds.table);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto s = stratified_split(ds.manifest, &ds.table, 0.2, seed);
    EXPECT_EQ(s.family_overlap(), 0u);
    expect_partition(ds.manifest, s);
    auto proportions = [&](const std::vector<InstanceKey>& keys) {
      std::map<ConfigId, double> p;
      for (const auto& k : keys) p[pi.best[ds.table.instance_index(k)]] += 1.0 / static_cast<double>(keys.size());
      return p;
    };
    auto a = proportions(s.train), b = proportions(s.test);
    for (const auto& c : ds.configs) EXPECT_LE(std::abs(a[c] - b[c]), 0.10) << c.to_string();
  }
}

TEST(MakeSplit, Dispatch) {
  const auto m = grid(5, 5);
  EXPECT_EQ(make_split(SplitStrategy::by_permutation, m, nullptr, 0.2, 1).strategy, SplitStrategy::by_permutation);
  EXPECT_EQ(make_split(SplitStrategy::by_instance, m, nullptr, 0.2, 1).strategy, SplitStrategy::by_instance);
  for (auto s : {SplitStrategy::by_instance, SplitStrategy::by_permutation, SplitStrategy::stratified})
    EXPECT_EQ(parse_split_strategy(to_string(s)), s);
}
