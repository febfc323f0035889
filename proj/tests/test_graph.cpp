#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace benloc;

TEST(Graph, CountsForTinyCover) {
  const auto g = build_graph(parse_mps(testutil::slurp("mps/tiny_cover.mps")));
  EXPECT_EQ(g.constraints.size(), 1u);
  EXPECT_EQ(g.variables.size(), 2u);
  EXPECT_EQ(g.edges.size(), 2u);
}

TEST(Graph, GoldenExport) {
  const auto g = build_graph(parse_mps(testutil::slurp("mps/tiny_cover.mps")));
  EXPECT_EQ(export_graph(g), testutil::slurp("graph/tiny_cover.json"));
}

TEST(Graph, SenseEncoding) {
  const auto g = build_graph(parse_mps(testutil::slurp("mps/fixed_testprob.mps")));
  // LIM1 <= 4, LIM2 >= 1, MYEQN = 7
  EXPECT_EQ(g.constraints[0], (ConstraintNode{-kInf, 4.0, 0, 1}));
  EXPECT_EQ(g.constraints[1], (ConstraintNode{1.0, kInf, 1, 0}));
  EXPECT_EQ(g.constraints[2], (ConstraintNode{7.0, 7.0, 1, 1}));
  EXPECT_EQ(g.variables[1].lb, -1.0);
  EXPECT_EQ(g.variables[2].hub, 0);
  EXPECT_EQ(g.variables[2].t, NodeVarType::continuous);
}

TEST(Graph, EqualityRowFive) {
  MipInstance inst;
  inst.col_names = {"x"};
  inst.obj_coeffs = {0};
  inst.var_lb = {0};
  inst.var_ub = {kInf};
  inst.var_types = {VarType::integer};
  inst.row_names = {"e"};
  inst.row_senses = {RowSense::eq};
  inst.rhs = {5};
  inst.matrix = {{0, 0, 2.0}};
  const auto g = build_graph(inst);
  EXPECT_EQ(g.constraints[0], (ConstraintNode{5.0, 5.0, 1, 1}));
  EXPECT_EQ(g.variables[0].t, NodeVarType::integer);
  EXPECT_EQ(g.variables[0].hub, 0);
}

TEST(Graph, DegreesSumToNnzAndIndicatorsMatchBounds) {
  for (const auto& p : testutil::mps_corpus()) {
    SCOPED_TRACE(p.filename().string());
    const auto inst = parse_mps(read_file(p));
    const auto g = build_graph(inst);
    const auto cd = g.constraint_degrees(), vd = g.variable_degrees();
    EXPECT_EQ(std::accumulate(cd.begin(), cd.end(), std::size_t{0}), inst.nnz());
    EXPECT_EQ(std::accumulate(vd.begin(), vd.end(), std::size_t{0}), inst.nnz());
    for (const auto& e : g.edges) EXPECT_NE(e.weight, 0.0);
    for (const auto& c : g.constraints) {
      EXPECT_EQ(c.hlb, std::isfinite(c.lb) ? 1 : 0);
      EXPECT_EQ(c.hub, std::isfinite(c.ub) ? 1 : 0);
    }
    for (const auto& v : g.variables) {
      EXPECT_EQ(v.hlb, std::isfinite(v.lb) ? 1 : 0);
      EXPECT_EQ(v.hub, std::isfinite(v.ub) ? 1 : 0);
    }
  }
}

TEST(Graph, RoundTrip) {
  for (const auto& p : testutil::mps_corpus()) {
    SCOPED_TRACE(p.filename().string());
    const auto g = build_graph(parse_mps(read_file(p)));
    EXPECT_EQ(import_graph(export_graph(g)), g);
  }
}

TEST(Graph, SetCoverEdgeLineCount) {
  const auto inst = parse_mps(testutil::slurp("mps/setcover_10x20.mps"));
  const auto text = export_graph(build_graph(inst));
  std::istringstream in(text);
  std::string line;
  std::size_t edge_lines = 0;
  while (std::getline(in, line))
    if (line.rfind("    [", 0) == 0) ++edge_lines;
  EXPECT_EQ(edge_lines, inst.nnz());
  EXPECT_EQ(edge_lines, gen_setcover(10, 20, 0.3, 0).nnz());
}

TEST(Graph, PermutationGivesIsomorphicGraph) {
  for (std::uint64_t s = 1; s <= 15; ++s) {
    const auto inst = testutil::random_instance(300 + s, 9, 11);
    const auto [p, rec] = permute_instance(inst, s);
    const auto g = build_graph(inst), h = build_graph(p);
    EXPECT_EQ(graph_signature(g), graph_signature(h));
    // the permutation itself is an explicit isomorphism
    std::set<std::tuple<std::size_t, std::size_t, double>> mapped;
    for (const auto& e : g.edges) mapped.insert({rec.row_perm[e.constraint], rec.col_perm[e.variable], e.weight});
    std::set<std::tuple<std::size_t, std::size_t, double>> target;
    for (const auto& e : h.edges) target.insert({e.constraint, e.variable, e.weight});
    EXPECT_EQ(mapped, target);
  }
}

TEST(Graph, ImportRejectsBadInput) {
  EXPECT_THROW(import_graph(R"({"format": "other"})"), Error);
  auto text = testutil::slurp("graph/tiny_cover.json");
  text.replace(text.find("\"num_edges\": 2"), 14, "\"num_edges\": 3");
  EXPECT_THROW(import_graph(text), Error);
}
