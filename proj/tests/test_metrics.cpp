#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace benloc;

namespace {

PerfTable random_table(std::uint64_t seed, std::size_t n_inst, std::size_t n_cfg, double limit = kDefaultTimeLimit) {
  Engine eng(seed);
  auto configs = default_oracle_configs();
  configs.resize(n_cfg);
  std::vector<PerfRecord> recs;
  for (std::size_t i = 0; i < n_inst; ++i)
    for (const auto& c : configs)
      recs.push_back({{"fam" + std::to_string(i / 3), i % 3}, c, 0.5 + std::exp(8.0 * uniform01(eng)), SolveStatus::optimal});
  return PerfTable(recs, limit);
}

long double reference_geomean(const std::vector<double>& t, long double shift) {
  long double acc = 0;
  for (double v : t) acc += std::log(static_cast<long double>(v) + shift);
  return std::exp(acc / static_cast<long double>(t.size())) - shift;
}

PerfTable two_config_table(std::vector<double> def, std::vector<double> other, ConfigId oc) {
  std::vector<PerfRecord> recs;
  for (std::size_t i = 0; i < def.size(); ++i) {
    recs.push_back({{"f", i}, ConfigId{}, def[i], SolveStatus::optimal});
    recs.push_back({{"f", i}, oc, other[i], SolveStatus::optimal});
  }
  return PerfTable(recs);
}

}  // namespace

TEST(ShiftedGeomean, ConstantList) {
  for (double shift : {0.0, 1.0, 10.0, 1000.0}) EXPECT_NEAR(shifted_geomean(std::vector<double>(7, 3.5), shift), 3.5, 1e-12);
}

TEST(ShiftedGeomean, PlainGeomean) { EXPECT_NEAR(shifted_geomean(std::vector<double>{1, 100}, 0), 10.0, 1e-12); }

TEST(ShiftedGeomean, ShiftTenExample) {
  const long double ref = std::sqrt(12.0L * 18.0L) - 10.0L;
  EXPECT_NEAR(shifted_geomean(std::vector<double>{2, 8}, 10), static_cast<double>(ref), 1e-12);
  EXPECT_NEAR(shifted_geomean(std::vector<double>{2, 8}, 10), 4.6969, 5e-5);
}

TEST(ShiftedGeomean, MatchesHighPrecisionReference) {
  Engine eng(12);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> t(1 + uniform_below(eng, 50));
    for (auto& v : t) v = 0.01 + 7200 * uniform01(eng);
    const double shift = 20 * uniform01(eng);
    EXPECT_NEAR(shifted_geomean(t, shift), static_cast<double>(reference_geomean(t, shift)), 1e-9);
  }
}

TEST(ShiftedGeomean, Errors) {
  EXPECT_THROW(shifted_geomean(std::vector<double>{}, 10), Error);
  EXPECT_THROW(shifted_geomean(std::vector<double>{1, 0}, 10), Error);
  EXPECT_THROW(shifted_geomean(std::vector<double>{1}, -1), Error);
}

TEST(ShiftedGeomean, MonotoneAndOrderFree) {
  Engine eng(3);
  for (int k = 0; k < 200; ++k) {
    std::vector<double> t(8);
    for (auto& v : t) v = 0.1 + 100 * uniform01(eng);
    const double g = shifted_geomean(t, 10);
    auto u = t;
    u[uniform_below(eng, u.size())] += 1.0;
    EXPECT_GT(shifted_geomean(u, 10), g);
    shuffle(t, eng);
    EXPECT_NEAR(shifted_geomean(t, 10), g, 1e-12);
  }
}

TEST(ShiftedGeomean, ScalesWithCoScaledShift) {
  const std::vector<double> t{1.5, 20, 300, 7};
  for (double k : {0.5, 3.0, 60.0}) {
    std::vector<double> s;
    for (double v : t) s.push_back(v * k);
    EXPECT_NEAR(shifted_geomean(s, 10 * k), k * shifted_geomean(t, 10), 1e-9 * k);
  }
}

TEST(PdBest, SingleConfig) {
  std::vector<PerfRecord> recs{{{"a", 0}, ConfigId{}, 5, SolveStatus::optimal}, {{"b", 0}, ConfigId{}, 9, SolveStatus::optimal}};
  const PerfTable t(recs);
  EXPECT_TRUE(pd_best(t).config.is_default());
  for (const auto& c : pi_best(t).best) EXPECT_TRUE(c.is_default());
  EXPECT_EQ(improvement_upper_bound(t), 0.0);
}

TEST(PdBest, Dominance) {
  const ConfigId fast(Param::DivingHeurLevel, 2);
  const auto t = two_config_table({10, 20, 30}, {9, 19, 29}, fast);
  EXPECT_EQ(pd_best(t).config, fast);
}

TEST(PdBest, TiesGoToDefaultThenLexicographic) {
  const auto t = two_config_table({10, 20}, {10, 20}, ConfigId(Param::RootCutLevel, 1));
  EXPECT_TRUE(pd_best(t).config.is_default());
  EXPECT_TRUE(pi_best(t).best[0].is_default());

  std::vector<PerfRecord> recs;
  const ConfigId a(Param::DivingHeurLevel, 0), b(Param::TreeCutLevel, 0);
  for (std::uint64_t s = 0; s < 2; ++s) {
    recs.push_back({{"f", s}, ConfigId{}, 50, SolveStatus::optimal});
    recs.push_back({{"f", s}, b, 5, SolveStatus::optimal});
    recs.push_back({{"f", s}, a, 5, SolveStatus::optimal});
  }
  const PerfTable u(recs);
  EXPECT_EQ(pd_best(u).config, a);
  EXPECT_EQ(pi_best(u).best[1], a);
}

TEST(PiBest, PerInstanceArgmin) {
  const ConfigId o(Param::StrongBranching, 3);
  const auto t = two_config_table({10, 5, 7}, {4, 6, 7}, o);
  const auto pi = pi_best(t);
  EXPECT_EQ(pi.best, (std::vector<ConfigId>{o, ConfigId{}, ConfigId{}}));
  EXPECT_EQ(pi.times, (std::vector<double>{4, 5, 7}));
}

TEST(Baselines, Ordering) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto t = random_table(s, 12, 1 + s % 9);
    const double def = default_geomean(t), pd = pd_best(t).geomean, pi = pi_best(t).geomean;
    EXPECT_LE(pi, pd + 1e-9);
    EXPECT_LE(pd, def + 1e-9);
    EXPECT_GE(improvement_upper_bound(t), -1e-12);
  }
}

TEST(Baselines, ArgminInvariantUnderScaling) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = random_table(100 + s, 9, 6, kInf);
    std::vector<PerfRecord> scaled;
    for (auto r : t.records()) {
      r.time *= 7.5;
      scaled.push_back(r);
    }
    const PerfTable u(scaled, kInf);
    EXPECT_EQ(pd_best(u, 75).config, pd_best(t, 10).config);
    EXPECT_EQ(pi_best(u, 75).best, pi_best(t, 10).best);
  }
}

TEST(Improvement, Examples) {
  EXPECT_NEAR(improvement(46.55, 45.39), 0.0249, 5e-5);
  EXPECT_EQ(improvement(3.0, 3.0), 0.0);
  EXPECT_NEAR(improvement(6.98, 6.50), 0.0688, 5e-5);
  EXPECT_LT(improvement(10, 12), 0.0);
  EXPECT_THROW(improvement(0, 1), Error);
}

TEST(Improvement, UpperBoundExamples) {
  EXPECT_NEAR(improvement_upper_bound(0.2567, 0.2653), 0.0086, 1e-12);
  EXPECT_NEAR(improvement_upper_bound(0.0067, 0.3466), 0.3399, 1e-12);
}

TEST(Suitability, RowFields) {
  const ConfigId o(Param::SubMipHeurLevel, 0);
  const auto t = two_config_table({10, 10}, {5, 20}, o);
  const auto row = suitability(t, "toy");
  const double def = shifted_geomean(std::vector<double>{10, 10}, 10);
  const double other = shifted_geomean(std::vector<double>{5, 20}, 10);
  const double pi = shifted_geomean(std::vector<double>{5, 10}, 10);
  EXPECT_EQ(row.instance_count, 2u);
  EXPECT_EQ(row.pd_best_config, other < def ? o : ConfigId{});
  EXPECT_NEAR(row.pi_best_improvement, (def - pi) / def, 1e-12);
  EXPECT_NEAR(row.upper_bound, row.pi_best_improvement - row.pd_best_improvement, 1e-15);
}

TEST(PerfTableTest, CapsAtTimeLimit) {
  std::vector<PerfRecord> recs{{{"a", 0}, ConfigId{}, 9000, SolveStatus::optimal}};
  const PerfTable t(recs);
  EXPECT_EQ(t.time(0, 0), 7200.0);
  EXPECT_EQ(t.status(0, 0), SolveStatus::time_limit);
}

TEST(PerfTableTest, RejectsBadInput) {
  const ConfigId o(Param::RootCutLevel, 0);
  EXPECT_THROW(PerfTable({{{"a", 0}, ConfigId{}, 1, SolveStatus::optimal}, {{"a", 0}, ConfigId{}, 2, SolveStatus::optimal}}),
               Error);
  EXPECT_THROW(PerfTable({{{"a", 0}, ConfigId{}, 1, SolveStatus::optimal}, {{"b", 0}, o, 2, SolveStatus::optimal}}), Error);
  EXPECT_THROW(PerfTable({{{"a", 0}, o, 1, SolveStatus::optimal}}), Error);
  EXPECT_THROW(PerfTable({{{"a", 0}, ConfigId{}, 0, SolveStatus::optimal}}), Error);
}

TEST(PerfTableTest, CsvRoundTrip) {
  const auto t = random_table(4, 10, 5);
  const auto csv = write_perf_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "family,seed,config,time,status");
  const auto u = read_perf_csv(csv);
  EXPECT_EQ(write_perf_csv(u), csv);
  EXPECT_EQ(u.instances(), t.instances());
  EXPECT_EQ(u.configs(), t.configs());
  EXPECT_THROW(read_perf_csv("a,b,c\n"), ParseError);
  EXPECT_THROW(read_perf_csv("family,seed,config,time,status\nf,0,Default,x,optimal\n"), ParseError);
}

TEST(PerfTableTest, Subset) {
  const auto t = random_table(5, 9, 4);
  const std::vector<InstanceKey> keys{t.instances()[2], t.instances()[7]};
  const auto s = t.subset(keys);
  ASSERT_EQ(s.num_instances(), 2u);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(s.time(1, c), t.time(7, c));
}

TEST(ConfigIdTest, ParsePrintOrder) {
  EXPECT_EQ(ConfigId::parse("Default"), ConfigId{});
  EXPECT_EQ(ConfigId::parse("RootCutLevel=-1"), ConfigId(Param::RootCutLevel, -1));
  EXPECT_EQ(ConfigId::parse("TreeCutLevel_2"), ConfigId(Param::TreeCutLevel, 2));
  EXPECT_EQ(ConfigId(Param::SubMipHeurLevel, 3).to_string(), "SubMipHeurLevel=3");
  EXPECT_EQ(ConfigId(Param::SubMipHeurLevel, 3).file_tag(), "SubMipHeurLevel_3");
  EXPECT_THROW(ConfigId(Param::RootCutLevel, 4), Error);
  EXPECT_THROW(ConfigId::parse("Presolve=1"), Error);
  EXPECT_THROW(ConfigId::parse("RootCutLevel=1.5"), Error);
  EXPECT_LT(ConfigId{}, ConfigId(Param::DivingHeurLevel, -1));
  EXPECT_LT(ConfigId(Param::DivingHeurLevel, 3), ConfigId(Param::RootCutLevel, -1));
  for (const auto& c : default_oracle_configs()) EXPECT_EQ(ConfigId::parse(c.to_string()), c);
}
