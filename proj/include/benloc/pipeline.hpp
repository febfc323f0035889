#pragma once

// Feature tables, split evaluation and the report layouts.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "benloc/learners.hpp"
#include "benloc/synth.hpp"

namespace benloc {

/// Everything known about one instance before it is solved with the chosen
/// configuration. Dynamic groups come from the Default-configuration log.
struct FeatureRow {
  InstanceKey key;
  StaticFeatureVector static_features;
  std::optional<DynamicFeatureVector> dynamic;
  double root_time = 0.0;  // Default root time, charged when the root is solved again
};

using FeatureTable = std::map<InstanceKey, FeatureRow>;

inline FeatureRow feature_row(const InstanceKey& key, const StaticFeatureVector& st, const SolveLog* default_log) {
  FeatureRow r{key, st, std::nullopt, 0.0};
  if (default_log) {
    r.dynamic = extract_dynamic(*default_log);
    r.root_time = default_log->root_time;
  }
  return r;
}

inline FeatureTable feature_table(const SynthDataset& ds) {
  FeatureTable t;
  const std::size_t d = ds.table.default_index();
  for (const auto& si : ds.instances) t.emplace(si.key, feature_row(si.key, si.static_features, &si.logs[d]));
  return t;
}

inline std::vector<double> row_features(const FeatureRow& r, FeatureStage stage) {
  if (stage == FeatureStage::StaticOnly) return assemble_features(r.static_features);
  if (!r.dynamic)
    throw MissingStageError("no log features for " + r.key.to_string() + " at stage " +
                            std::string(to_string(stage)));
  return assemble_features(r.static_features, *r.dynamic, stage);
}

/// Labelled examples for `keys` (all table instances when empty).
inline ExampleSet build_examples(const FeatureTable& features, const PerfTable& table, FeatureStage stage,
                                 const std::vector<InstanceKey>& keys = {}, double shift = kDefaultShift) {
  ExampleSet set;
  set.feature_names = feature_names(stage);
  set.configs = table.configs();
  const auto labels = make_labels(table, shift);
  const auto& use = keys.empty() ? table.instances() : keys;
  for (const auto& k : use) {
    const auto f = features.find(k);
    if (f == features.end()) throw Error("no features for " + k.to_string());
    const std::size_t i = table.instance_index(k);
    LabeledExample e;
    e.key = k;
    e.features = row_features(f->second, stage);
    e.labels = labels[i];
    e.best = argmin_config(table, i);
    for (std::size_t c = 0; c < table.num_configs(); ++c) e.times.push_back(table.time(i, c));
    set.examples.push_back(std::move(e));
  }
  return set;
}

// ---------------------------------------------------------------------------
// Feature store CSV: family,seed,<stage columns...>,root_time; absent groups
// are empty cells.
// ---------------------------------------------------------------------------

inline std::string write_features_csv(const FeatureTable& t) {
  std::ostringstream out;
  out << "family,seed";
  for (const auto& n : feature_names(FeatureStage::UpToRootEnd)) out << ',' << n;
  out << ",root_time\n";
  constexpr std::size_t n_dyn = 3 + 4 + 7 + 7;
  for (const auto& [k, r] : t) {
    out << k.family << ',' << k.seed;
    for (double v : r.static_features.values) out << ',' << format_double(v);
    std::vector<std::string> dyn(n_dyn);
    if (r.dynamic) {
      std::size_t at = 0;
      auto put = [&](const auto& group) {
        if (group)
          for (std::size_t i = 0; i < group->size(); ++i) dyn[at + i] = format_double((*group)[i]);
        at += std::tuple_size_v<typename std::remove_cvref_t<decltype(group)>::value_type>;
      };
      put(r.dynamic->presolve);
      put(r.dynamic->global_cut);
      put(r.dynamic->first_root_lp);
      put(r.dynamic->root_end);
    }
    for (const auto& s : dyn) out << ',' << s;
    out << ',' << (r.dynamic ? format_double(r.root_time) : std::string()) << '\n';
  }
  return out.str();
}

inline FeatureTable read_features_csv(std::string_view text) {
  FeatureTable t;
  const auto names = feature_names(FeatureStage::UpToRootEnd);
  std::size_t pos = 0, line_no = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != names.size() + 3) throw ParseError(line_no, "expected " + std::to_string(names.size() + 3) + " fields");
    if (header) {
      if (f[0] != "family" || f[1] != "seed") throw ParseError(line_no, "bad feature header");
      for (std::size_t i = 0; i < names.size(); ++i)
        if (f[i + 2] != names[i]) throw ParseError(line_no, "unexpected column '" + f[i + 2] + "'");
      header = false;
      continue;
    }
    auto num = [&](const std::string& s) {
      double v;
      if (!parse_double(s, v)) throw ParseError(line_no, "bad number '" + s + "'");
      return v;
    };
    FeatureRow r;
    r.key.family = f[0];
    r.key.seed = static_cast<std::uint64_t>(num(f[1]));
    std::size_t at = 2;
    for (auto& v : r.static_features.values) v = num(f[at++]);
    auto group = [&](auto& opt, std::size_t n) {
      bool all = true, none = true;
      for (std::size_t i = 0; i < n; ++i) (f[at + i].empty() ? all : none) = false;
      if (!all && !none) throw ParseError(line_no, "partially filled feature group");
      if (all) {
        typename std::remove_reference_t<decltype(opt)>::value_type a{};
        for (std::size_t i = 0; i < n; ++i) a[i] = num(f[at + i]);
        opt = a;
      }
      at += n;
    };
    DynamicFeatureVector d;
    group(d.presolve, 3);
    group(d.global_cut, 4);
    group(d.first_root_lp, 7);
    group(d.root_end, 7);
    if (!d.stage_mask().empty()) {
      r.dynamic = d;
      r.root_time = f[at].empty() ? 0.0 : num(f[at]);
    }
    t.emplace(r.key, std::move(r));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

struct SplitEvaluation {
  std::uint64_t seed = 0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  ConfigId pd_best;           // chosen on the training instances
  double default_time = 0.0;  // shifted geomeans over the test instances
  double pd_best_time = 0.0;
  double predict_time = 0.0;  // includes the extra root cost where it applies
  double pi_best_time = 0.0;
  double imp_default = 0.0;
  double imp_pd_best = 0.0;
  double pi_recovery = 0.0;       // share of test instances whose PI-best was picked
  double planted_recovery = -1.0; // same against planted optima; negative when unknown
  double leakage = 0.0;
};

struct EvalOptions {
  FeatureStage stage = FeatureStage::StaticOnly;
  ModelKind kind = ModelKind::reg_forest;
  Hyperparams hyperparams;
  std::uint64_t learner_seed = 0;
  double shift = kDefaultShift;
  RootImpactTable root_impact;
  const std::map<InstanceKey, ConfigId>* planted = nullptr;
};

inline SplitEvaluation evaluate_split(const FeatureTable& features, const PerfTable& table,
                                      const SplitAssignment& split, const EvalOptions& opt) {
  const auto registry = split.strategy == SplitStrategy::by_permutation
                            ? TestRegistry::allow_permutation_leakage(split.test)
                            : TestRegistry::families_of(split.test);
  const auto train_set = build_examples(features, table, opt.stage, split.train, opt.shift);
  const auto test_set = build_examples(features, table, opt.stage, split.test, opt.shift);
  const auto model = train(opt.kind, train_set, opt.hyperparams, opt.learner_seed, registry);

  SplitEvaluation ev;
  ev.seed = split.seed;
  ev.train_size = split.train.size();
  ev.test_size = split.test.size();
  ev.leakage = split.leakage();
  const PerfTable train_table = table.subset(split.train);
  ev.pd_best = pd_best(train_table, opt.shift).config;
  const std::size_t pd_ix = table.config_index(ev.pd_best);

  std::vector<double> def_t, pd_t, pred_t, pi_t;
  std::size_t hit = 0, planted_hit = 0;
  for (const auto& e : test_set.examples) {
    const std::size_t i = table.instance_index(e.key);
    const std::size_t pick = model.predict_index(e.features);
    const ConfigId& cfg = table.configs()[pick];
    def_t.push_back(table.time(i, table.default_index()));
    pd_t.push_back(table.time(i, pd_ix));
    pred_t.push_back(extra_cost(table.time(i, pick), features.at(e.key).root_time, opt.stage, opt.root_impact(cfg)));
    pi_t.push_back(table.time(i, e.best));
    hit += pick == e.best;
    if (opt.planted) planted_hit += opt.planted->at(e.key) == cfg;
  }
  ev.default_time = shifted_geomean(def_t, opt.shift);
  ev.pd_best_time = shifted_geomean(pd_t, opt.shift);
  ev.predict_time = shifted_geomean(pred_t, opt.shift);
  ev.pi_best_time = shifted_geomean(pi_t, opt.shift);
  ev.imp_default = improvement(ev.default_time, ev.predict_time);
  ev.imp_pd_best = improvement(ev.pd_best_time, ev.predict_time);
  const double n = static_cast<double>(test_set.examples.size());
  ev.pi_recovery = static_cast<double>(hit) / n;
  if (opt.planted) ev.planted_recovery = static_cast<double>(planted_hit) / n;
  return ev;
}

struct RunConfig {
  std::string dataset = "dataset";
  FeatureStage stage = FeatureStage::StaticOnly;
  ModelKind kind = ModelKind::reg_forest;
  SplitStrategy strategy = SplitStrategy::by_instance;
  std::vector<std::uint64_t> seeds{0};
  double test_fraction = kDefaultTestFraction;
  double shift = kDefaultShift;
  Hyperparams hyperparams;
};

struct PipelineReport {
  RunConfig run;
  std::vector<SplitEvaluation> splits;
  // Mean of the per-split improvements.
  double mean_imp_default = 0.0;
  double mean_imp_pd_best = 0.0;
  // Improvement computed from the per-split times averaged first.
  double pooled_imp_default = 0.0;
  double pooled_imp_pd_best = 0.0;
  double mean_default_time = 0.0;
  double mean_pd_best_time = 0.0;
  double mean_predict_time = 0.0;
  double mean_pi_recovery = 0.0;
};

inline PipelineReport summarize(const RunConfig& run, std::vector<SplitEvaluation> splits) {
  if (splits.empty()) throw Error("no splits to summarize");
  PipelineReport r;
  r.run = run;
  r.splits = std::move(splits);
  const double n = static_cast<double>(r.splits.size());
  for (const auto& s : r.splits) {
    r.mean_imp_default += s.imp_default / n;
    r.mean_imp_pd_best += s.imp_pd_best / n;
    r.mean_default_time += s.default_time / n;
    r.mean_pd_best_time += s.pd_best_time / n;
    r.mean_predict_time += s.predict_time / n;
    r.mean_pi_recovery += s.pi_recovery / n;
  }
  r.pooled_imp_default = improvement(r.mean_default_time, r.mean_predict_time);
  r.pooled_imp_pd_best = improvement(r.mean_pd_best_time, r.mean_predict_time);
  return r;
}

/// One evaluation per seed. Split and learner are both reseeded.
inline PipelineReport run_pipeline(const DatasetManifest& manifest, const PerfTable& table,
                                   const FeatureTable& features, const RunConfig& run,
                                   const std::map<InstanceKey, ConfigId>* planted = nullptr) {
  if (run.seeds.empty()) throw Error("run needs at least one seed");
  std::vector<SplitEvaluation> evs(run.seeds.size());
  for (std::size_t k = 0; k < run.seeds.size(); ++k) {
    const auto split = make_split(run.strategy, manifest, &table, run.test_fraction, run.seeds[k], run.shift);
    EvalOptions opt;
    opt.stage = run.stage;
    opt.kind = run.kind;
    opt.hyperparams = run.hyperparams;
    opt.learner_seed = derive_seed(run.seeds[k], 0x1EA4);
    opt.shift = run.shift;
    opt.planted = planted;
    evs[k] = evaluate_split(features, table, split, opt);
  }
  return summarize(run, std::move(evs));
}

// ---------------------------------------------------------------------------
// Text reports
// ---------------------------------------------------------------------------

namespace detail {

inline std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w;
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (w.size() <= c) w.push_back(0);
      w[c] = std::max(w[c], r[c].size());
    }
  std::ostringstream out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      if (c) out << "  ";
      out << rows[i][c];
      if (c + 1 < rows[i].size()) out << std::string(w[c] - rows[i][c].size(), ' ');
    }
    out << '\n';
    if (i == 0) {
      std::size_t total = 0;
      for (auto x : w) total += x + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace detail

inline std::string suitability_report(const std::vector<SuitabilityRow>& rows) {
  std::vector<std::vector<std::string>> t{
      {"Dataset", "Instances", "PD Best Config", "PD Best Imp.", "PI Best Imp.", "Imp. UB"}};
  for (const auto& r : rows)
    t.push_back({r.dataset, std::to_string(r.instance_count), r.pd_best_config.to_string(),
                 format_percent(r.pd_best_improvement), format_percent(r.pi_best_improvement),
                 format_percent(r.upper_bound)});
  return detail::render_table(t);
}

inline std::string suitability_csv(const std::vector<SuitabilityRow>& rows) {
  std::ostringstream out;
  out << "dataset,instances,pd_best_config,pd_best_improvement,pi_best_improvement,upper_bound\n";
  for (const auto& r : rows)
    out << r.dataset << ',' << r.instance_count << ',' << r.pd_best_config.to_string() << ','
        << format_double(r.pd_best_improvement) << ',' << format_double(r.pi_best_improvement) << ','
        << format_double(r.upper_bound) << '\n';
  return out.str();
}

inline std::string pipeline_report_text(const PipelineReport& r) {
  std::ostringstream out;
  out << "dataset: " << r.run.dataset << "\nstage: " << to_string(r.run.stage) << "\nmodel: " << to_string(r.run.kind)
      << "\nsplit: " << to_string(r.run.strategy) << "\n\n";
  std::vector<std::vector<std::string>> t{{"Seed", "Train", "Test", "PD Best", "Default", "PD Best Time", "Predict",
                                           "Imp. Default", "Imp. PD Best", "PI Recovery"}};
  for (const auto& s : r.splits)
    t.push_back({std::to_string(s.seed), std::to_string(s.train_size), std::to_string(s.test_size),
                 s.pd_best.to_string(), format_fixed(s.default_time, 2), format_fixed(s.pd_best_time, 2),
                 format_fixed(s.predict_time, 2), format_percent(s.imp_default), format_percent(s.imp_pd_best),
                 format_percent(s.pi_recovery)});
  t.push_back({"mean", "", "", "", format_fixed(r.mean_default_time, 2), format_fixed(r.mean_pd_best_time, 2),
               format_fixed(r.mean_predict_time, 2), format_percent(r.mean_imp_default),
               format_percent(r.mean_imp_pd_best), format_percent(r.mean_pi_recovery)});
  out << detail::render_table(t);
  out << "\nimprovement of mean times: Imp. Default " << format_percent(r.pooled_imp_default) << ", Imp. PD Best "
      << format_percent(r.pooled_imp_pd_best) << '\n';
  return out.str();
}

inline std::string pipeline_report_csv(const PipelineReport& r) {
  std::ostringstream out;
  out << "seed,train,test,pd_best,default_time,pd_best_time,predict_time,pi_best_time,imp_default,imp_pd_best,"
         "pi_recovery,leakage\n";
  for (const auto& s : r.splits)
    out << s.seed << ',' << s.train_size << ',' << s.test_size << ',' << s.pd_best.to_string() << ','
        << format_double(s.default_time) << ',' << format_double(s.pd_best_time) << ','
        << format_double(s.predict_time) << ',' << format_double(s.pi_best_time) << ','
        << format_double(s.imp_default) << ',' << format_double(s.imp_pd_best) << ','
        << format_double(s.pi_recovery) << ',' << format_double(s.leakage) << '\n';
  out << "mean,,,," << format_double(r.mean_default_time) << ',' << format_double(r.mean_pd_best_time) << ','
      << format_double(r.mean_predict_time) << ",," << format_double(r.mean_imp_default) << ','
      << format_double(r.mean_imp_pd_best) << ',' << format_double(r.mean_pi_recovery) << ",\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// On-disk datasets
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, std::string_view text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

inline std::string log_file_name(const InstanceKey& k, const ConfigId& c) {
  return k.to_string() + "." + c.file_tag() + ".log";
}

/// Writes instances (when kept), logs, the performance table, the feature
/// store and manifest.json under `dir`.
inline void write_synth_dataset(const SynthDataset& ds, const std::filesystem::path& dir) {
  DatasetManifest m = ds.manifest;
  m.perf_table = "perf.csv";
  m.feature_store = "features.csv";
  m.logs_dir = "logs";
  for (auto& fam : m.families)
    for (auto& ref : fam.instances)
      if (ds.at({fam.id, ref.seed}).instance.num_cols() == 0) ref.path.clear();
  for (const auto& si : ds.instances) {
    if (si.instance.num_cols() > 0) write_file(dir / "instances" / (si.key.to_string() + ".mps"), write_mps(si.instance));
    for (std::size_t c = 0; c < ds.configs.size(); ++c)
      write_file(dir / "logs" / log_file_name(si.key, ds.configs[c]), write_log(si.logs[c]));
  }
  write_file(dir / "perf.csv", write_perf_csv(ds.table));
  write_file(dir / "features.csv", write_features_csv(feature_table(ds)));
  std::ostringstream planted;
  planted << "family,seed,planted_best\n";
  for (const auto& si : ds.instances)
    planted << si.key.family << ',' << si.key.seed << ',' << ds.configs[si.planted_best].to_string() << '\n';
  write_file(dir / "planted.csv", planted.str());
  write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");
}

/// Features for every manifest instance: from the feature store when the
/// manifest names one, otherwise static features from the instance files and
/// dynamic ones from Default logs that exist.
inline FeatureTable load_features(const DatasetManifest& m, const std::filesystem::path& base) {
  if (!m.feature_store.empty() && std::filesystem::exists(base / m.feature_store))
    return read_features_csv(read_file(base / m.feature_store));
  FeatureTable t;
  for (const auto& fam : m.families)
    for (const auto& ref : fam.instances) {
      const InstanceKey key{fam.id, ref.seed};
      const auto st = extract_static(parse_mps(read_file(base / ref.path)));
      std::optional<SolveLog> log;
      if (!m.logs_dir.empty()) {
        const auto p = base / m.logs_dir / log_file_name(key, ConfigId{});
        if (std::filesystem::exists(p)) log = parse_log(read_file(p));
      }
      t.emplace(key, feature_row(key, st, log ? &*log : nullptr));
    }
  return t;
}

}  // namespace benloc
