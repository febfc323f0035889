#pragma once

// Variable/constraint bipartite graph with node features, exported as text
// for external GNN pipelines.
//
// Export schema (benloc-bipartite-v1). Infinite bounds are the strings
// "inf"/"-inf" and always come with the matching indicator set to 0. Each
// edge is on its own line as [constraint, variable, weight].
//
//   {
//     "format": "benloc-bipartite-v1",
//     "num_constraints": m,
//     "num_variables": n,
//     "num_edges": e,
//     "constraints": [
//       {"lb": .., "ub": .., "hlb": 0|1, "hub": 0|1},
//       ...
//     ],
//     "variables": [
//       {"hlb": 0|1, "hub": 0|1, "c": .., "lb": .., "ub": .., "t": "integer"|"continuous"},
//       ...
//     ],
//     "edges": [
//       [i, j, w],
//       ...
//     ]
//   }

#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "benloc/instance.hpp"

namespace benloc {

struct ConstraintNode {
  double lb = -kInf;
  double ub = kInf;
  int hlb = 0;
  int hub = 0;
  friend bool operator==(const ConstraintNode&, const ConstraintNode&) = default;
};

enum class NodeVarType { integer, continuous };

struct VariableNode {
  int hlb = 0;
  int hub = 0;
  double c = 0.0;
  double lb = -kInf;
  double ub = kInf;
  NodeVarType t = NodeVarType::continuous;
  friend bool operator==(const VariableNode&, const VariableNode&) = default;
};

struct GraphEdge {
  std::size_t constraint = 0;
  std::size_t variable = 0;
  double weight = 0.0;
  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct BipartiteGraph {
  std::vector<ConstraintNode> constraints;
  std::vector<VariableNode> variables;
  std::vector<GraphEdge> edges;

  std::vector<std::size_t> constraint_degrees() const {
    std::vector<std::size_t> d(constraints.size(), 0);
    for (const auto& e : edges) ++d[e.constraint];
    return d;
  }
  std::vector<std::size_t> variable_degrees() const {
    std::vector<std::size_t> d(variables.size(), 0);
    for (const auto& e : edges) ++d[e.variable];
    return d;
  }

  friend bool operator==(const BipartiteGraph&, const BipartiteGraph&) = default;
};

/// Row sense becomes an interval: <= b -> (-inf, b], >= b -> [b, inf), = b -> [b, b].
inline BipartiteGraph build_graph(const MipInstance& inst) {
  BipartiteGraph g;
  g.constraints.reserve(inst.num_rows());
  for (std::size_t i = 0; i < inst.num_rows(); ++i) {
    ConstraintNode c;
    const double b = inst.rhs[i];
    switch (inst.row_senses[i]) {
      case RowSense::le: c.ub = b; break;
      case RowSense::ge: c.lb = b; break;
      case RowSense::eq: c.lb = c.ub = b; break;
    }
    c.hlb = std::isfinite(c.lb) ? 1 : 0;
    c.hub = std::isfinite(c.ub) ? 1 : 0;
    g.constraints.push_back(c);
  }
  g.variables.reserve(inst.num_cols());
  for (std::size_t j = 0; j < inst.num_cols(); ++j) {
    VariableNode v;
    v.c = inst.obj_coeffs[j];
    v.lb = inst.var_lb[j];
    v.ub = inst.var_ub[j];
    v.hlb = std::isfinite(v.lb) ? 1 : 0;
    v.hub = std::isfinite(v.ub) ? 1 : 0;
    v.t = inst.var_types[j] == VarType::continuous ? NodeVarType::continuous : NodeVarType::integer;
    g.variables.push_back(v);
  }
  g.edges.reserve(inst.nnz());
  for (const auto& e : inst.matrix) g.edges.push_back({e.row, e.col, e.coef});
  std::sort(g.edges.begin(), g.edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return std::tie(a.constraint, a.variable) < std::tie(b.constraint, b.variable);
  });
  return g;
}

namespace detail {

inline std::string json_number(double v) {
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  return format_double(v);
}

inline double json_to_double(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw Error("bad numeric string '" + s + "' in graph file");
  }
  return j.get<double>();
}

}  // namespace detail

inline std::string export_graph(const BipartiteGraph& g) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"format\": \"benloc-bipartite-v1\",\n";
  out << "  \"num_constraints\": " << g.constraints.size() << ",\n";
  out << "  \"num_variables\": " << g.variables.size() << ",\n";
  out << "  \"num_edges\": " << g.edges.size() << ",\n";
  out << "  \"constraints\": [\n";
  for (std::size_t i = 0; i < g.constraints.size(); ++i) {
    const auto& c = g.constraints[i];
    out << "    {\"lb\": " << detail::json_number(c.lb) << ", \"ub\": " << detail::json_number(c.ub)
        << ", \"hlb\": " << c.hlb << ", \"hub\": " << c.hub << "}" << (i + 1 < g.constraints.size() ? "," : "")
        << "\n";
  }
  out << "  ],\n";
  out << "  \"variables\": [\n";
  for (std::size_t j = 0; j < g.variables.size(); ++j) {
    const auto& v = g.variables[j];
    out << "    {\"hlb\": " << v.hlb << ", \"hub\": " << v.hub << ", \"c\": " << detail::json_number(v.c)
        << ", \"lb\": " << detail::json_number(v.lb) << ", \"ub\": " << detail::json_number(v.ub) << ", \"t\": \""
        << (v.t == NodeVarType::integer ? "integer" : "continuous") << "\"}"
        << (j + 1 < g.variables.size() ? "," : "") << "\n";
  }
  out << "  ],\n";
  out << "  \"edges\": [\n";
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    const auto& e = g.edges[k];
    out << "    [" << e.constraint << ", " << e.variable << ", " << detail::json_number(e.weight) << "]"
        << (k + 1 < g.edges.size() ? "," : "") << "\n";
  }
  out << "  ]\n";
  out << "}\n";
  return out.str();
}

inline BipartiteGraph import_graph(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  if (j.at("format") != "benloc-bipartite-v1") throw Error("unsupported graph format");
  BipartiteGraph g;
  for (const auto& c : j.at("constraints")) {
    g.constraints.push_back({detail::json_to_double(c.at("lb")), detail::json_to_double(c.at("ub")),
                             c.at("hlb").get<int>(), c.at("hub").get<int>()});
  }
  for (const auto& v : j.at("variables")) {
    VariableNode node;
    node.hlb = v.at("hlb").get<int>();
    node.hub = v.at("hub").get<int>();
    node.c = detail::json_to_double(v.at("c"));
    node.lb = detail::json_to_double(v.at("lb"));
    node.ub = detail::json_to_double(v.at("ub"));
    node.t = v.at("t") == "integer" ? NodeVarType::integer : NodeVarType::continuous;
    g.variables.push_back(node);
  }
  for (const auto& e : j.at("edges"))
    g.edges.push_back({e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>(), detail::json_to_double(e.at(2))});
  if (g.constraints.size() != j.at("num_constraints").get<std::size_t>() ||
      g.variables.size() != j.at("num_variables").get<std::size_t>() ||
      g.edges.size() != j.at("num_edges").get<std::size_t>())
    throw Error("graph file counts do not match its tables");
  return g;
}

/// Permutation-invariant summary used to compare graphs up to relabeling:
/// sorted degree sequences, sorted edge weights, and the sorted multisets of
/// node feature tuples.
struct GraphSignature {
  std::vector<std::size_t> constraint_degrees;
  std::vector<std::size_t> variable_degrees;
  std::vector<double> edge_weights;
  std::vector<std::tuple<double, double, int, int>> constraint_features;
  std::vector<std::tuple<int, int, double, double, double, int>> variable_features;
  friend bool operator==(const GraphSignature&, const GraphSignature&) = default;
};

inline GraphSignature graph_signature(const BipartiteGraph& g) {
  GraphSignature s;
  s.constraint_degrees = g.constraint_degrees();
  s.variable_degrees = g.variable_degrees();
  std::sort(s.constraint_degrees.begin(), s.constraint_degrees.end());
  std::sort(s.variable_degrees.begin(), s.variable_degrees.end());
  for (const auto& e : g.edges) s.edge_weights.push_back(e.weight);
  std::sort(s.edge_weights.begin(), s.edge_weights.end());
  for (const auto& c : g.constraints) s.constraint_features.emplace_back(c.lb, c.ub, c.hlb, c.hub);
  for (const auto& v : g.variables)
    s.variable_features.emplace_back(v.hlb, v.hub, v.c, v.lb, v.ub, static_cast<int>(v.t));
  std::sort(s.constraint_features.begin(), s.constraint_features.end());
  std::sort(s.variable_features.begin(), s.variable_features.end());
  return s;
}

}  // namespace benloc
