#pragma once

// Solver-log parsing and the staged dynamic feature groups.
//
// Canonical log schema, one record per line:
//
//   PRESOLVE  rows=<n> cols=<n> integers=<n>
//   GLOBALCUT dual_bound=<c_d> primal_bound=<c_p> lp_bound=<c_l>
//   ROOTLP    active=<x> intinf=<x> glbred=<x> gap=<x> time=<s> objective_density=<x> symmetries=<x>
//   ROOT_END  nodes=<x> lpit_per_node=<x> glbfix=<x> cuts=<x> mcp=<x> sepa=<x> conf=<x> time=<s>
//   STATUS    status=<optimal|time_limit|infeasible|error> total_time=<s> root_time=<s>
//             [instance=<id>] [config=<id>]
//
// Stages must appear in the order above, STATUS is last and mandatory.
// Lines whose first token is not a stage keyword are counted and skipped.

#include <array>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "benloc/static_features.hpp"

namespace benloc {

enum class LogStage { presolve, global_cut, first_root_lp, root_end };
enum class SolveStatus { optimal, time_limit, infeasible, error };

inline constexpr std::array<std::string_view, 4> kLogStageKeywords = {"PRESOLVE", "GLOBALCUT", "ROOTLP",
                                                                      "ROOT_END"};

inline std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::time_limit: return "time_limit";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::error: return "error";
  }
  return "error";
}

inline SolveStatus parse_status(std::string_view s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "time_limit") return SolveStatus::time_limit;
  if (s == "infeasible") return SolveStatus::infeasible;
  if (s == "error") return SolveStatus::error;
  throw LogSchemaError("unknown status '" + std::string(s) + "'");
}

struct LogEvent {
  LogStage stage;
  std::string key;
  double value;
  friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

struct SolveLog {
  std::string instance_id;
  std::string config_id;
  std::vector<LogEvent> events;
  double total_time = 0.0;
  double root_time = 0.0;
  SolveStatus status = SolveStatus::error;
  std::size_t unknown_lines = 0;

  bool has_stage(LogStage s) const {
    for (const auto& e : events)
      if (e.stage == s) return true;
    return false;
  }

  std::optional<double> value(LogStage s, std::string_view key) const {
    for (const auto& e : events)
      if (e.stage == s && e.key == key) return e.value;
    return std::nullopt;
  }

  friend bool operator==(const SolveLog&, const SolveLog&) = default;
};

inline SolveLog parse_log(std::string_view text) {
  SolveLog log;
  int last_rank = -1;
  bool have_status = false;
  std::size_t line_no = 0, pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty()) continue;

    int rank = -1;
    for (std::size_t s = 0; s < kLogStageKeywords.size(); ++s)
      if (toks[0] == kLogStageKeywords[s]) rank = static_cast<int>(s);
    if (toks[0] == "STATUS") rank = 4;
    if (rank < 0) {
      ++log.unknown_lines;
      continue;
    }
    if (have_status)
      throw LogSchemaError("line " + std::to_string(line_no) + ": record after STATUS");
    if (rank < last_rank)
      throw LogSchemaError("line " + std::to_string(line_no) + ": stage " + std::string(toks[0]) +
                           " out of order");
    last_rank = rank;

    bool seen_total = false, seen_root = false, seen_status = false;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      const auto eq = toks[k].find('=');
      if (eq == std::string_view::npos || eq == 0)
        throw LogSchemaError("line " + std::to_string(line_no) + ": expected key=value, got '" +
                             std::string(toks[k]) + "'");
      const std::string_view key = toks[k].substr(0, eq), val = toks[k].substr(eq + 1);
      if (rank == 4) {
        if (key == "status") {
          log.status = parse_status(val);
          seen_status = true;
          continue;
        }
        if (key == "instance") {
          log.instance_id = std::string(val);
          continue;
        }
        if (key == "config") {
          log.config_id = std::string(val);
          continue;
        }
      }
      double v;
      if (!parse_double(val, v))
        throw LogSchemaError("line " + std::to_string(line_no) + ": non-numeric value for '" +
                             std::string(key) + "'");
      if (rank == 4) {
        if (key == "total_time") {
          log.total_time = v;
          seen_total = true;
        } else if (key == "root_time") {
          log.root_time = v;
          seen_root = true;
        }
        continue;
      }
      log.events.push_back({static_cast<LogStage>(rank), std::string(key), v});
    }
    if (rank == 4) {
      if (!seen_status || !seen_total || !seen_root)
        throw LogSchemaError("line " + std::to_string(line_no) + ": STATUS needs status, total_time, root_time");
      if (log.total_time < 0.0 || log.root_time < 0.0 || log.root_time > log.total_time)
        throw LogSchemaError("line " + std::to_string(line_no) + ": inconsistent times");
      have_status = true;
    }
  }
  if (!have_status) throw IncompleteLogError("log has no STATUS line");
  return log;
}

/// Canonical text for a log; one line per populated stage.
inline std::string write_log(const SolveLog& log) {
  std::ostringstream out;
  for (std::size_t s = 0; s < kLogStageKeywords.size(); ++s) {
    bool any = false;
    for (const auto& e : log.events) {
      if (static_cast<std::size_t>(e.stage) != s) continue;
      if (!any) out << kLogStageKeywords[s];
      any = true;
      out << ' ' << e.key << '=' << format_double(e.value);
    }
    if (any) out << '\n';
  }
  out << "STATUS status=" << to_string(log.status) << " total_time=" << format_double(log.total_time)
      << " root_time=" << format_double(log.root_time);
  if (!log.instance_id.empty()) out << " instance=" << log.instance_id;
  if (!log.config_id.empty()) out << " config=" << log.config_id;
  out << '\n';
  return out.str();
}

/// Seam for solver-specific log formats.
class LogAdapter {
 public:
  virtual ~LogAdapter() = default;
  virtual SolveLog parse(std::string_view text) const = 0;
};

class CanonicalLogAdapter final : public LogAdapter {
 public:
  SolveLog parse(std::string_view text) const override { return parse_log(text); }
};

// ---------------------------------------------------------------------------
// Gap features
// ---------------------------------------------------------------------------

struct GapFeatures {
  double dual_initial = 0.0;
  double primal_dual = 0.0;
  double primal_initial = 0.0;
  double gap_closed = 1.0;
};

/// |a - b| / max(|a|, |b|, |a - b|); 0 when all three vanish.
inline double relative_gap(double a, double b) {
  const double diff = std::abs(a - b);
  const double denom = std::max({std::abs(a), std::abs(b), diff});
  return denom == 0.0 ? 0.0 : diff / denom;
}

/// dual_bound c_d, primal_bound c_p, initial LP bound c_l.
inline GapFeatures gap_features(double dual_bound, double primal_bound, double lp_bound) {
  if (!std::isfinite(dual_bound) || !std::isfinite(primal_bound) || !std::isfinite(lp_bound))
    throw Error("gap features need finite bounds");
  GapFeatures g;
  g.dual_initial = relative_gap(dual_bound, lp_bound);
  g.primal_dual = relative_gap(primal_bound, dual_bound);
  g.primal_initial = relative_gap(primal_bound, lp_bound);
  g.gap_closed = 1.0 - g.primal_dual;
  return g;
}

// ---------------------------------------------------------------------------
// Dynamic feature groups
// ---------------------------------------------------------------------------

enum class FeatureStage { StaticOnly, UpToFirstRootLP, UpToRootEnd };

inline std::string_view to_string(FeatureStage s) {
  switch (s) {
    case FeatureStage::StaticOnly: return "static";
    case FeatureStage::UpToFirstRootLP: return "first_root_lp";
    case FeatureStage::UpToRootEnd: return "root_end";
  }
  return "static";
}

inline FeatureStage parse_feature_stage(std::string_view s) {
  if (s == "static" || s == "StaticOnly") return FeatureStage::StaticOnly;
  if (s == "first_root_lp" || s == "UpToFirstRootLP") return FeatureStage::UpToFirstRootLP;
  if (s == "root_end" || s == "UpToRootEnd") return FeatureStage::UpToRootEnd;
  throw Error("unknown feature stage '" + std::string(s) + "'");
}

inline constexpr std::array<std::string_view, 3> kPresolveFeatureNames = {"PresolRows", "PresolColumns",
                                                                          "PresolIntegers"};
inline constexpr std::array<std::string_view, 4> kGlobalCutFeatureNames = {"DualInitialGap", "PrimalDualGap",
                                                                           "PrimalInitialGap", "GapClosed"};
// The static vector already has a "Symmetries" column, hence the prefix here.
inline constexpr std::array<std::string_view, 7> kFirstRootLpFeatureNames = {
    "Active", "IntInf", "GlbRed", "Gap", "Time", "objective_density", "RootLPSymmetries"};
inline constexpr std::array<std::string_view, 7> kRootEndFeatureNames = {"Nodes", "LPit/n", "GlbFix", "#Cuts",
                                                                         "#MCP",  "#Sepa",  "#Conf"};

inline constexpr std::array<std::string_view, 7> kFirstRootLpLogKeys = {
    "active", "intinf", "glbred", "gap", "time", "objective_density", "symmetries"};
inline constexpr std::array<std::string_view, 7> kRootEndLogKeys = {"nodes", "lpit_per_node", "glbfix", "cuts",
                                                                    "mcp",   "sepa",          "conf"};

/// Groups that the log did not reach stay empty; they are never zero-filled.
struct DynamicFeatureVector {
  std::optional<std::array<double, 3>> presolve;
  std::optional<std::array<double, 4>> global_cut;
  std::optional<std::array<double, 7>> first_root_lp;
  std::optional<std::array<double, 7>> root_end;

  bool has(LogStage s) const {
    switch (s) {
      case LogStage::presolve: return presolve.has_value();
      case LogStage::global_cut: return global_cut.has_value();
      case LogStage::first_root_lp: return first_root_lp.has_value();
      case LogStage::root_end: return root_end.has_value();
    }
    return false;
  }

  std::vector<LogStage> stage_mask() const {
    std::vector<LogStage> out;
    for (auto s : {LogStage::presolve, LogStage::global_cut, LogStage::first_root_lp, LogStage::root_end})
      if (has(s)) out.push_back(s);
    return out;
  }

  friend bool operator==(const DynamicFeatureVector&, const DynamicFeatureVector&) = default;
};

inline DynamicFeatureVector extract_dynamic(const SolveLog& log) {
  auto need = [&](LogStage s, std::string_view key) {
    auto v = log.value(s, key);
    if (!v)
      throw LogSchemaError("stage " + std::string(kLogStageKeywords[static_cast<std::size_t>(s)]) +
                           " is missing key '" + std::string(key) + "'");
    return *v;
  };
  DynamicFeatureVector d;
  if (log.has_stage(LogStage::presolve)) {
    const double rows = need(LogStage::presolve, "rows");
    const double cols = need(LogStage::presolve, "cols");
    const double ints = need(LogStage::presolve, "integers");
    d.presolve = std::array<double, 3>{std::log(std::max(1.0, rows)), std::log(std::max(1.0, cols)),
                                       cols > 0 ? ints / cols : 0.0};
  }
  if (log.has_stage(LogStage::global_cut)) {
    const auto g = gap_features(need(LogStage::global_cut, "dual_bound"), need(LogStage::global_cut, "primal_bound"),
                                need(LogStage::global_cut, "lp_bound"));
    d.global_cut = std::array<double, 4>{g.dual_initial, g.primal_dual, g.primal_initial, g.gap_closed};
  }
  if (log.has_stage(LogStage::first_root_lp)) {
    std::array<double, 7> a{};
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = need(LogStage::first_root_lp, kFirstRootLpLogKeys[i]);
    d.first_root_lp = a;
  }
  if (log.has_stage(LogStage::root_end)) {
    std::array<double, 7> a{};
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = need(LogStage::root_end, kRootEndLogKeys[i]);
    d.root_end = a;
  }
  return d;
}

/// Column names of the flat vector produced for `stage`.
inline std::vector<std::string> feature_names(FeatureStage stage) {
  std::vector<std::string> out(kStaticFeatureNames.begin(), kStaticFeatureNames.end());
  if (stage == FeatureStage::StaticOnly) return out;
  out.insert(out.end(), kPresolveFeatureNames.begin(), kPresolveFeatureNames.end());
  out.insert(out.end(), kGlobalCutFeatureNames.begin(), kGlobalCutFeatureNames.end());
  out.insert(out.end(), kFirstRootLpFeatureNames.begin(), kFirstRootLpFeatureNames.end());
  if (stage == FeatureStage::UpToFirstRootLP) return out;
  out.insert(out.end(), kRootEndFeatureNames.begin(), kRootEndFeatureNames.end());
  return out;
}

inline std::vector<double> assemble_features(const StaticFeatureVector& st) {
  return {st.values.begin(), st.values.end()};
}

/// Static columns, then presolve, global-cut, first-root-LP and (for
/// UpToRootEnd) root-end groups. Throws MissingStageError when a required
/// group is absent.
inline std::vector<double> assemble_features(const StaticFeatureVector& st, const DynamicFeatureVector& dyn,
                                             FeatureStage stage) {
  std::vector<double> out = assemble_features(st);
  if (stage == FeatureStage::StaticOnly) return out;
  auto require = [&](bool ok, std::string_view group) {
    if (!ok)
      throw MissingStageError("feature stage " + std::string(to_string(stage)) + " needs the " +
                              std::string(group) + " group");
  };
  require(dyn.presolve.has_value(), "presolve");
  require(dyn.global_cut.has_value(), "global-cut");
  require(dyn.first_root_lp.has_value(), "first-root-LP");
  out.insert(out.end(), dyn.presolve->begin(), dyn.presolve->end());
  out.insert(out.end(), dyn.global_cut->begin(), dyn.global_cut->end());
  out.insert(out.end(), dyn.first_root_lp->begin(), dyn.first_root_lp->end());
  if (stage == FeatureStage::UpToFirstRootLP) return out;
  require(dyn.root_end.has_value(), "root-end");
  out.insert(out.end(), dyn.root_end->begin(), dyn.root_end->end());
  return out;
}

/// Evaluation time after assigning the predicted configuration. Root-end
/// features are only known after the root has been solved under the default
/// settings; if the predicted configuration changes root processing the root
/// has to be solved again.
inline double extra_cost(double total_time, double root_time, FeatureStage stage, bool config_affects_root) {
  if (total_time < 0.0 || root_time < 0.0) throw Error("times must be non-negative");
  if (stage == FeatureStage::UpToRootEnd && config_affects_root) return total_time + root_time;
  return total_time;
}

}  // namespace benloc
