#pragma once

// Synthetic set-cover / independent-set generators and a solve-time oracle
// with a planted per-instance optimum.

#include <map>
#include <string>
#include <vector>

#include "benloc/instance.hpp"
#include "benloc/log_features.hpp"
#include "benloc/metrics.hpp"
#include "benloc/splits.hpp"
#include "benloc/static_features.hpp"

namespace benloc {

/// minimize sum x_j  s.t.  every row covers at least one column of its
/// support. Each column enters a row with probability `density`; empty rows
/// are redrawn.
inline MipInstance gen_setcover(std::size_t rows, std::size_t cols, double density, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw Error("set cover needs rows >= 1 and cols >= 1");
  if (!(density > 0.0 && density <= 1.0)) throw Error("set cover density must be in (0, 1]");
  Engine eng(seed);
  MipInstance inst;
  inst.name = "setcover";
  inst.sense = ObjSense::minimize;
  inst.obj_coeffs.assign(cols, 1.0);
  inst.var_lb.assign(cols, 0.0);
  inst.var_ub.assign(cols, 1.0);
  inst.var_types.assign(cols, VarType::binary);
  for (std::size_t j = 0; j < cols; ++j) inst.col_names.push_back("x" + std::to_string(j));
  for (std::size_t i = 0; i < rows; ++i) {
    std::vector<std::size_t> support;
    while (support.empty())
      for (std::size_t j = 0; j < cols; ++j)
        if (density >= 1.0 || uniform01(eng) < density) support.push_back(j);
    for (auto j : support) inst.matrix.push_back({i, j, 1.0});
    inst.row_senses.push_back(RowSense::ge);
    inst.rhs.push_back(1.0);
    inst.row_names.push_back("cover" + std::to_string(i));
  }
  inst.normalize();
  return inst;
}

/// maximize sum x_v  s.t.  x_u + x_v <= 1 for every edge of a G(n, p) graph.
inline MipInstance gen_indset(std::size_t nodes, double edge_prob, std::uint64_t seed) {
  if (nodes < 2) throw Error("independent set needs at least 2 nodes");
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) throw Error("edge probability must be in [0, 1]");
  Engine eng(seed);
  MipInstance inst;
  inst.name = "indset";
  inst.sense = ObjSense::maximize;
  inst.obj_coeffs.assign(nodes, 1.0);
  inst.var_lb.assign(nodes, 0.0);
  inst.var_ub.assign(nodes, 1.0);
  inst.var_types.assign(nodes, VarType::binary);
  for (std::size_t v = 0; v < nodes; ++v) inst.col_names.push_back("v" + std::to_string(v));
  for (std::size_t u = 0; u < nodes; ++u)
    for (std::size_t v = u + 1; v < nodes; ++v) {
      if (edge_prob < 1.0 && !(uniform01(eng) < edge_prob)) continue;
      const std::size_t r = inst.num_rows();
      inst.matrix.push_back({r, u, 1.0});
      inst.matrix.push_back({r, v, 1.0});
      inst.row_senses.push_back(RowSense::le);
      inst.rhs.push_back(1.0);
      inst.row_names.push_back("e" + std::to_string(u) + "_" + std::to_string(v));
    }
  inst.normalize();
  return inst;
}

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

/// `above` is optimal when the named feature exceeds `threshold`, `below`
/// otherwise. The factors multiply the configuration's base time.
struct PlantedRule {
  std::string feature = "NonZeros";
  double threshold = 0.5;
  ConfigId above{Param::RootCutLevel, 3};
  ConfigId below{Param::TreeCutLevel, 1};
  double above_win = 0.6;
  double above_lose = 1.3;
  double below_win = 0.8;
  double below_lose = 1.1;
};

struct OracleSpec {
  std::uint64_t seed = 0;
  std::map<ConfigId, double> base;  // overrides; see default_base_multiplier
  PlantedRule rule;
  double noise_sigma = 0.05;   // per (instance, config) lognormal sigma
  double family_sigma = 0.0;   // per (family, config) lognormal sigma shared by all permutations
  double proxy_noise = 0.15;   // noise on the first-root-LP proxy of the root-end latent
  double time_limit = kDefaultTimeLimit;

  void validate() const {
    for (const auto& [c, m] : base)
      if (!(m > 0.0)) throw Error("oracle multiplier for " + c.to_string() + " must be positive");
    if (noise_sigma < 0.0 || family_sigma < 0.0 || proxy_noise < 0.0) throw Error("oracle noise must be >= 0");
    if (!(rule.above_win > 0.0 && rule.above_lose > 0.0 && rule.below_win > 0.0 && rule.below_lose > 0.0))
      throw Error("planted factors must be positive");
    if (!(time_limit > 0.0)) throw Error("time limit must be positive");
  }
};

/// Default 1, SubMipHeurLevel=0 slightly faster everywhere, everything else
/// a fixed 5-30% slower. The two planted configurations start from 1.
inline double default_base_multiplier(const ConfigId& c) {
  if (c.is_default()) return 1.0;
  if (c == ConfigId(Param::SubMipHeurLevel, 0)) return 0.92;
  const double u = static_cast<double>(fnv1a(c.to_string()) >> 11) * 0x1.0p-53;
  return 1.05 + 0.25 * u;
}

/// Default plus every parameter at levels 0..3.
inline std::vector<ConfigId> default_oracle_configs() {
  std::vector<ConfigId> out{ConfigId{}};
  for (std::size_t p = 0; p < kParamNames.size(); ++p)
    for (int l = 0; l <= 3; ++l) out.emplace_back(static_cast<Param>(p), l);
  std::sort(out.begin(), out.end());
  return out;
}

struct OracleResult {
  std::vector<double> times;        // capped, per configuration
  std::vector<double> clean_times;  // without noise terms, uncapped
  std::vector<SolveLog> logs;       // per configuration
  std::size_t planted_best = 0;     // argmin of clean_times
  double rule_value = 0.0;
};

namespace detail {

inline double rounded(double v, int decimals) {
  const double s = std::pow(10.0, decimals);
  return std::round(v * s) / s;
}

}  // namespace detail

/// Times and logs for one permuted instance under every configuration.
///
/// ln t = ln T0 + ln base + ln planted + family term + instance noise, where
/// T0 grows with the number of nonzeros. The root-end group carries a latent
/// per-instance value (cuts = 100 u); the first-root-LP intinf is the same
/// latent with extra noise, and static features carry none of it.
inline OracleResult oracle_times(const InstanceKey& key, const StaticFeatureVector& st,
                                 const std::vector<ConfigId>& configs, const OracleSpec& spec) {
  spec.validate();
  if (configs.empty()) throw Error("oracle needs at least one configuration");
  const double m = std::exp(st.get("Rows")), n = std::exp(st.get("Columns"));
  const double nnz = st.get("NonZeros") * m * n;

  Engine eng(derive_seed(spec.seed, fnv1a(key.to_string())));
  const double u = uniform01(eng);
  const double root_frac = 0.03 + 0.02 * uniform01(eng);
  const double proxy = std::max(0.0, u + spec.proxy_noise * standard_normal(eng));

  SolveLog proto;
  proto.instance_id = key.to_string();
  auto ev = [&](LogStage s, std::string k, double v) { proto.events.push_back({s, std::move(k), v}); };
  ev(LogStage::presolve, "rows", std::round(m * (0.8 + 0.2 * uniform01(eng))));
  const double presol_cols = std::max(1.0, std::round(n * (0.9 + 0.1 * uniform01(eng))));
  ev(LogStage::presolve, "cols", presol_cols);
  ev(LogStage::presolve, "integers", std::round(presol_cols * st.get("Binaries") * (0.9 + 0.1 * uniform01(eng))));
  const double lp = detail::rounded(10.0 + 90.0 * uniform01(eng), 4);
  const double dual = detail::rounded(lp * (1.0 + 0.2 * uniform01(eng)), 4);
  const double primal = detail::rounded(dual * (1.0 + 0.5 * uniform01(eng)), 4);
  ev(LogStage::global_cut, "dual_bound", dual);
  ev(LogStage::global_cut, "primal_bound", primal);
  ev(LogStage::global_cut, "lp_bound", lp);
  ev(LogStage::first_root_lp, "active", std::round(m * uniform01(eng)));
  ev(LogStage::first_root_lp, "intinf", detail::rounded(100.0 * proxy, 2));
  ev(LogStage::first_root_lp, "glbred", std::round(10.0 * uniform01(eng)));
  ev(LogStage::first_root_lp, "gap", detail::rounded(uniform01(eng), 4));
  ev(LogStage::first_root_lp, "time", detail::rounded(0.01 + uniform01(eng), 3));
  ev(LogStage::first_root_lp, "objective_density", detail::rounded(uniform01(eng), 4));
  ev(LogStage::first_root_lp, "symmetries", 0.0);
  ev(LogStage::root_end, "nodes", 1.0);
  ev(LogStage::root_end, "lpit_per_node", std::round(50.0 + 500.0 * uniform01(eng)));
  ev(LogStage::root_end, "glbfix", std::round(20.0 * uniform01(eng)));
  ev(LogStage::root_end, "cuts", detail::rounded(100.0 * u, 2));
  ev(LogStage::root_end, "mcp", std::round(10.0 * uniform01(eng)));
  ev(LogStage::root_end, "sepa", std::round(10.0 * uniform01(eng)));
  ev(LogStage::root_end, "conf", std::round(5.0 * uniform01(eng)));

  // Named view over every column the rule may key on.
  const auto dyn = extract_dynamic(proto);
  const auto names = feature_names(FeatureStage::UpToRootEnd);
  const auto values = assemble_features(st, dyn, FeatureStage::UpToRootEnd);
  const auto at = std::find(names.begin(), names.end(), spec.rule.feature);
  if (at == names.end()) throw Error("planted rule names unknown feature '" + spec.rule.feature + "'");

  OracleResult out;
  out.rule_value = values[static_cast<std::size_t>(at - names.begin())];
  const bool above = out.rule_value > spec.rule.threshold;
  const double t0 = 20.0 + 10.0 * std::log1p(nnz);

  for (std::size_t c = 0; c < configs.size(); ++c) {
    const ConfigId& cfg = configs[c];
    auto b = spec.base.find(cfg);
    const bool planted = cfg == spec.rule.above || cfg == spec.rule.below;
    double mult = b != spec.base.end() ? b->second : planted ? 1.0 : default_base_multiplier(cfg);
    if (cfg == spec.rule.above) mult *= above ? spec.rule.above_win : spec.rule.above_lose;
    if (cfg == spec.rule.below) mult *= above ? spec.rule.below_lose : spec.rule.below_win;
    const double clean = t0 * mult;

    const std::string cfg_s = cfg.to_string();
    Engine fam(derive_seed(spec.seed ^ 0xFA3111ULL, fnv1a(cfg_s, fnv1a(key.family))));
    Engine inst(derive_seed(spec.seed ^ 0x1A57A3CEULL, fnv1a(cfg_s, fnv1a(key.to_string()))));
    const double noise = spec.family_sigma * standard_normal(fam) + spec.noise_sigma * standard_normal(inst);
    const double raw = detail::rounded(clean * std::exp(noise), 3);
    const double t = std::min(std::max(raw, 0.001), spec.time_limit);

    out.clean_times.push_back(clean);
    out.times.push_back(t);

    SolveLog log = proto;
    log.config_id = cfg_s;
    log.status = raw >= spec.time_limit ? SolveStatus::time_limit : SolveStatus::optimal;
    log.total_time = t;
    log.root_time = detail::rounded(t * root_frac, 3);
    log.events.push_back({LogStage::root_end, "time", log.root_time});
    out.logs.push_back(std::move(log));
  }
  out.planted_best = static_cast<std::size_t>(std::min_element(out.clean_times.begin(), out.clean_times.end()) -
                                              out.clean_times.begin());
  return out;
}

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

enum class SynthKind { setcover, indset, mixed };

inline SynthKind parse_synth_kind(std::string_view s) {
  if (s == "setcover") return SynthKind::setcover;
  if (s == "indset") return SynthKind::indset;
  if (s == "mixed") return SynthKind::mixed;
  throw Error("unknown instance kind '" + std::string(s) + "'");
}

/// Each family draws its size and density uniformly from the given ranges;
/// permutations 0..permutations-1 of it form the family's instances.
struct SynthDatasetSpec {
  std::string name = "synth";
  SynthKind kind = SynthKind::setcover;
  std::size_t families = 20;
  std::size_t permutations = 10;
  std::pair<std::size_t, std::size_t> rows{10, 30};
  std::pair<std::size_t, std::size_t> cols{20, 60};
  std::pair<double, double> density{0.1, 0.9};
  std::pair<std::size_t, std::size_t> nodes{20, 60};
  std::pair<double, double> edge_prob{0.05, 0.3};
  std::uint64_t seed = 0;
  bool keep_instances = false;
  OracleSpec oracle;
  std::vector<ConfigId> configs = default_oracle_configs();
};

struct SynthInstance {
  InstanceKey key;
  MipInstance instance;  // empty unless keep_instances
  PermutationRecord permutation;
  StaticFeatureVector static_features;
  std::vector<SolveLog> logs;  // per configuration, dataset configuration order
  std::size_t planted_best = 0;
  double rule_value = 0.0;
};

struct SynthDataset {
  DatasetManifest manifest;
  PerfTable table;
  std::vector<ConfigId> configs;  // sorted, Default first, same as table.configs()
  std::vector<SynthInstance> instances;  // in table instance order
  ConfigId planted_pd_best;

  const SynthInstance& at(const InstanceKey& k) const { return instances.at(table.instance_index(k)); }
};

inline std::string synth_family_name(SynthKind kind, std::size_t f) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", kind == SynthKind::indset ? "indset" : "setcover", f);
  return buf;
}

inline SynthDataset build_synth_dataset(const SynthDatasetSpec& spec) {
  if (spec.families < 1 || spec.permutations < 1) throw Error("dataset needs families >= 1 and permutations >= 1");
  spec.oracle.validate();
  std::vector<ConfigId> configs = spec.configs;
  std::sort(configs.begin(), configs.end());
  configs.erase(std::unique(configs.begin(), configs.end()), configs.end());
  if (configs.empty() || !configs.front().is_default()) throw Error("oracle configurations must include Default");

  std::vector<std::vector<SynthInstance>> per_family(spec.families);
  std::vector<std::string> fam_names(spec.families);
  std::vector<std::vector<double>> clean(spec.families * spec.permutations);

  parallel_for(spec.families, [&](std::size_t f) {
    Engine eng(derive_seed(spec.seed, f));
    const SynthKind kind =
        spec.kind == SynthKind::mixed ? (f % 2 == 0 ? SynthKind::setcover : SynthKind::indset) : spec.kind;
    auto pick = [&](auto range) {
      using T = decltype(range.first);
      if constexpr (std::is_floating_point_v<T>)
        return range.first + (range.second - range.first) * uniform01(eng);
      else
        return static_cast<T>(range.first + uniform_below(eng, range.second - range.first + 1));
    };
    MipInstance base;
    if (kind == SynthKind::setcover) {
      const auto r = pick(spec.rows), c = pick(spec.cols);
      const double d = pick(spec.density);
      base = gen_setcover(r, c, d, eng());
    } else {
      const auto nd = pick(spec.nodes);
      const double p = pick(spec.edge_prob);
      base = gen_indset(nd, p, eng());
      if (base.num_rows() == 0) base = gen_indset(nd, 1.0, eng());
    }
    fam_names[f] = synth_family_name(kind, f);
    base.name = fam_names[f];
    for (std::size_t s = 0; s < spec.permutations; ++s) {
      SynthInstance si;
      si.key = {fam_names[f], s};
      auto [perm_inst, rec] = permute_instance(base, s);
      si.static_features = extract_static(perm_inst);
      si.permutation = std::move(rec);
      auto res = oracle_times(si.key, si.static_features, configs, spec.oracle);
      si.logs = std::move(res.logs);
      si.planted_best = res.planted_best;
      si.rule_value = res.rule_value;
      clean[f * spec.permutations + s] = std::move(res.clean_times);
      if (spec.keep_instances) si.instance = std::move(perm_inst);
      per_family[f].push_back(std::move(si));
    }
  });

  SynthDataset ds;
  ds.configs = configs;
  ds.manifest.name = spec.name;
  ds.manifest.time_limit = spec.oracle.time_limit;
  std::vector<PerfRecord> recs, clean_recs;
  for (std::size_t f = 0; f < spec.families; ++f) {
    Family fam{fam_names[f], {}};
    for (std::size_t s = 0; s < spec.permutations; ++s) {
      const auto& si = per_family[f][s];
      fam.instances.push_back({s, "instances/" + si.key.to_string() + ".mps"});
      for (std::size_t c = 0; c < configs.size(); ++c) {
        recs.push_back({si.key, configs[c], si.logs[c].total_time, si.logs[c].status});
        clean_recs.push_back({si.key, configs[c], clean[f * spec.permutations + s][c], SolveStatus::optimal});
      }
    }
    ds.manifest.families.push_back(std::move(fam));
  }
  ds.table = PerfTable(recs, spec.oracle.time_limit);
  ds.planted_pd_best = pd_best(PerfTable(clean_recs, kInf)).config;
  for (const auto& k : ds.table.instances()) {
    for (std::size_t f = 0; f < spec.families; ++f)
      if (fam_names[f] == k.family) ds.instances.push_back(std::move(per_family[f][k.seed]));
  }
  return ds;
}

}  // namespace benloc
