#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "benloc/benloc.hpp"

namespace fs = std::filesystem;
using namespace benloc;

namespace {

// "0..9" (inclusive), "3", or "1,4,7".
std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  if (const auto dots = s.find(".."); dots != std::string::npos) {
    const auto lo = std::stoull(s.substr(0, dots)), hi = std::stoull(s.substr(dots + 2));
    if (hi < lo) throw Error("empty seed range '" + s + "'");
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  for (const auto& part : split(s, ','))
    if (!trim(part).empty()) out.push_back(std::stoull(std::string(trim(part))));
  if (out.empty()) throw Error("no seeds in '" + s + "'");
  return out;
}

struct Loaded {
  fs::path base;
  DatasetManifest manifest;
  PerfTable table;
};

Loaded load_dataset(const std::string& manifest_path) {
  Loaded d;
  d.base = fs::path(manifest_path).parent_path();
  d.manifest = manifest_from_json(nlohmann::json::parse(read_file(manifest_path)));
  d.manifest.validate_files(d.base);
  if (d.manifest.perf_table.empty()) throw Error("manifest names no performance table");
  d.table = read_perf_csv(read_file(d.base / d.manifest.perf_table), d.manifest.time_limit);
  return d;
}

void add_hyperparams(CLI::App* app, Hyperparams& hp) {
  app->add_option("--trees", hp.n_trees, "Trees per forest")->capture_default_str();
  app->add_option("--depth", hp.max_depth, "Maximum tree depth")->capture_default_str();
  app->add_option("--min-leaf", hp.min_samples_leaf, "Minimum samples per leaf")->capture_default_str();
  app->add_option("--max-features", hp.max_features, "Features tried per split: 0 = sqrt(d), <=1 fraction, >1 count")
      ->capture_default_str();
  app->add_option("--k", hp.k, "Neighbours for knn")->capture_default_str();
}

// Runs one named pipeline stage; failures are reported with the stage name.
struct StageError : Error {
  StageError(const std::string& stage, const std::string& what) : Error(stage + ": " + what), stage(stage) {}
  std::string stage;
};

template <typename F>
auto stage(const std::string& name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"benloc: per-instance MIP configuration benchmark toolkit"};
  app.require_subcommand(1);

  // synth ------------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with oracle solve times and logs");
  std::string kind = "setcover", out_dir;
  std::size_t rows = 200, cols = 400, nodes = 300, count = 10, perms = 10;
  double density = 0.05, density_max = -1, edge_prob = 0.02;
  std::uint64_t seed = 0;
  OracleSpec oracle;
  synth->add_option("--kind", kind, "setcover, indset or mixed")->capture_default_str();
  synth->add_option("--rows", rows, "Set-cover rows")->capture_default_str();
  synth->add_option("--cols", cols, "Set-cover columns")->capture_default_str();
  synth->add_option("--density", density, "Set-cover density (lower end when --density-max is given)")
      ->capture_default_str();
  synth->add_option("--density-max", density_max, "Upper end of the per-family density range");
  synth->add_option("--nodes", nodes, "Independent-set nodes")->capture_default_str();
  synth->add_option("--edge-prob", edge_prob, "Independent-set edge probability")->capture_default_str();
  synth->add_option("--count", count, "Number of families")->capture_default_str();
  synth->add_option("--perms", perms, "Permutations per family, seeds 0..perms-1")->capture_default_str();
  synth->add_option("--seed", seed, "Generator seed")->capture_default_str();
  synth->add_option("--noise", oracle.noise_sigma, "Per-instance lognormal sigma")->capture_default_str();
  synth->add_option("--family-noise", oracle.family_sigma, "Per-family lognormal sigma")->capture_default_str();
  synth->add_option("--rule-feature", oracle.rule.feature, "Feature the planted rule keys on")->capture_default_str();
  synth->add_option("--rule-threshold", oracle.rule.threshold, "Planted rule threshold")->capture_default_str();
  synth->add_option("--time-limit", oracle.time_limit, "Time limit in seconds")->capture_default_str();
  synth->add_option("--out-dir", out_dir, "Output directory")->required();

  // permute ----------------------------------------------------------------
  auto* permute = app.add_subcommand("permute", "Write row/column permutations of an MPS file");
  std::string in_path, seeds_arg = "0..9";
  permute->add_option("--in", in_path, "Input MPS file")->required();
  permute->add_option("--seeds", seeds_arg, "Seed list: 0..9, 3 or 1,4,7")->capture_default_str();
  permute->add_option("--out-dir", out_dir, "Output directory")->required();

  // features ---------------------------------------------------------------
  auto* features = app.add_subcommand("features", "Extract features");
  std::string manifest_path, out_path, mps_path, log_path, graph_path;
  features->add_option("--manifest", manifest_path, "Dataset manifest; writes the feature CSV");
  features->add_option("--mps", mps_path, "Single MPS file; prints its static features");
  features->add_option("--log", log_path, "Single log; prints its dynamic features");
  features->add_option("--graph", graph_path, "With --mps: write the bipartite graph export here");
  features->add_option("--out", out_path, "Output file (default stdout)");

  // split ------------------------------------------------------------------
  auto* split_cmd = app.add_subcommand("split", "Assign instances to train and test");
  std::string strategy = "by_instance";
  double test_frac = kDefaultTestFraction;
  split_cmd->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  split_cmd->add_option("--strategy", strategy, "by_instance, by_permutation or stratified")->capture_default_str();
  split_cmd->add_option("--test-frac", test_frac, "Test fraction")->capture_default_str();
  split_cmd->add_option("--seed", seed, "Split seed")->capture_default_str();
  split_cmd->add_option("--out", out_path, "Output JSON (default stdout)");

  // train ------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "Train a selector on the training side of a split");
  std::string split_path, model_kind = "reg_forest", stage_name = "static", importance_path;
  std::size_t search_budget = 0;
  double shift = kDefaultShift;
  Hyperparams hp;
  train_cmd->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  train_cmd->add_option("--split", split_path, "Split JSON")->required();
  train_cmd->add_option("--kind", model_kind, "reg_forest, clf_forest, knn or pair_ranker")->capture_default_str();
  train_cmd->add_option("--stage", stage_name, "static, first_root_lp or root_end")->capture_default_str();
  train_cmd->add_option("--seed", seed, "Learner seed")->capture_default_str();
  train_cmd->add_option("--shift", shift, "Geometric mean shift")->capture_default_str();
  train_cmd->add_option("--search-budget", search_budget, "Random-search trials before training (0 = off)");
  train_cmd->add_option("--importance", importance_path, "Write feature importances (CSV) here");
  train_cmd->add_option("--out", out_path, "Model JSON")->required();
  add_hyperparams(train_cmd, hp);

  // predict ----------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Predict configurations for the test side of a split");
  std::string model_path;
  predict->add_option("--model", model_path, "Model JSON")->required();
  predict->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  predict->add_option("--split", split_path, "Split JSON (default: every instance)");
  predict->add_option("--out", out_path, "Output CSV (default stdout)");

  // evaluate ---------------------------------------------------------------
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a trained model on the test side of a split");
  evaluate->add_option("--model", model_path, "Model JSON")->required();
  evaluate->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  evaluate->add_option("--split", split_path, "Split JSON")->required();
  evaluate->add_option("--shift", shift, "Geometric mean shift")->capture_default_str();

  // suitability ------------------------------------------------------------
  auto* suit = app.add_subcommand("suitability", "PD-best, PI-best and improvement upper bound per dataset");
  std::vector<std::string> perf_paths;
  bool csv = false;
  suit->add_option("--perf", perf_paths, "Performance CSV files")->required();
  suit->add_option("--shift", shift, "Geometric mean shift")->capture_default_str();
  suit->add_flag("--csv", csv, "Emit CSV instead of a text table");

  // pipeline ---------------------------------------------------------------
  auto* pipeline = app.add_subcommand("pipeline", "Features, split, train, predict and report for each seed");
  pipeline->add_option("--manifest", manifest_path, "Dataset manifest")->required();
  pipeline->add_option("--stage", stage_name, "static, first_root_lp or root_end")->capture_default_str();
  pipeline->add_option("--kind", model_kind, "reg_forest, clf_forest, knn or pair_ranker")->capture_default_str();
  pipeline->add_option("--strategy", strategy, "by_instance, by_permutation or stratified")->capture_default_str();
  pipeline->add_option("--seeds", seeds_arg, "Split seeds")->capture_default_str();
  pipeline->add_option("--test-frac", test_frac, "Test fraction")->capture_default_str();
  pipeline->add_option("--shift", shift, "Geometric mean shift")->capture_default_str();
  pipeline->add_option("--out-dir", out_dir, "Report directory")->required();
  add_hyperparams(pipeline, hp);

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      SynthDatasetSpec spec;
      spec.kind = parse_synth_kind(kind);
      spec.families = count;
      spec.permutations = perms;
      spec.rows = {rows, rows};
      spec.cols = {cols, cols};
      spec.density = {density, density_max > 0 ? density_max : density};
      spec.nodes = {nodes, nodes};
      spec.edge_prob = {edge_prob, edge_prob};
      spec.seed = seed;
      spec.oracle = oracle;
      spec.oracle.seed = seed;
      spec.keep_instances = true;
      spec.name = fs::path(out_dir).filename().string();
      const auto ds = build_synth_dataset(spec);
      write_synth_dataset(ds, out_dir);
      std::printf("wrote %zu instances x %zu configurations to %s\n", ds.table.num_instances(), ds.configs.size(),
                  out_dir.c_str());
    } else if (permute->parsed()) {
      std::vector<std::string> warnings;
      const auto inst = parse_mps(read_file(in_path), warnings);
      for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      const std::string stem = fs::path(in_path).stem().string();
      for (auto s : parse_seed_list(seeds_arg)) {
        const auto [p, rec] = permute_instance(inst, s);
        const fs::path base = fs::path(out_dir) / (stem + ".perm" + std::to_string(s));
        write_file(base.string() + ".mps", write_mps(p));
        nlohmann::json j{{"seed", rec.seed}, {"row_perm", rec.row_perm}, {"col_perm", rec.col_perm}};
        write_file(base.string() + ".json", j.dump() + "\n");
      }
    } else if (features->parsed()) {
      std::string text;
      if (!manifest_path.empty()) {
        const fs::path base = fs::path(manifest_path).parent_path();
        auto m = manifest_from_json(nlohmann::json::parse(read_file(manifest_path)));
        m.feature_store.clear();
        text = write_features_csv(load_features(m, base));
      } else if (!mps_path.empty()) {
        const auto inst = parse_mps(read_file(mps_path));
        const auto st = extract_static(inst);
        for (std::size_t i = 0; i < st.size(); ++i) text += std::string(kStaticFeatureNames[i]) + "=" + format_double(st[i]) + "\n";
        if (!graph_path.empty()) write_file(graph_path, export_graph(build_graph(inst)));
      } else if (!log_path.empty()) {
        const auto log = parse_log(read_file(log_path));
        const auto d = extract_dynamic(log);
        auto emit = [&](const auto& names, const auto& group) {
          if (!group) return;
          for (std::size_t i = 0; i < names.size(); ++i) text += std::string(names[i]) + "=" + format_double((*group)[i]) + "\n";
        };
        emit(kPresolveFeatureNames, d.presolve);
        emit(kGlobalCutFeatureNames, d.global_cut);
        emit(kFirstRootLpFeatureNames, d.first_root_lp);
        emit(kRootEndFeatureNames, d.root_end);
        text += "total_time=" + format_double(log.total_time) + "\nroot_time=" + format_double(log.root_time) + "\n";
      } else {
        throw Error("features needs --manifest, --mps or --log");
      }
      if (out_path.empty()) std::cout << text;
      else write_file(out_path, text);
    } else if (split_cmd->parsed()) {
      const auto d = load_dataset(manifest_path);
      const auto s = make_split(parse_split_strategy(strategy), d.manifest, &d.table, test_frac, seed);
      const std::string text = to_json(s).dump(2) + "\n";
      if (out_path.empty()) std::cout << text;
      else write_file(out_path, text);
    } else if (train_cmd->parsed()) {
      const auto d = load_dataset(manifest_path);
      const auto s = split_from_json(nlohmann::json::parse(read_file(split_path)));
      const auto ft = load_features(d.manifest, d.base);
      const auto st = parse_feature_stage(stage_name);
      const auto kind_v = parse_model_kind(model_kind);
      const auto train_set = build_examples(ft, d.table, st, s.train, shift);
      if (search_budget > 0) {
        const auto r = random_search(kind_v, train_set, SearchSpace{}, search_budget, seed, shift);
        hp = r.best;
        std::printf("random search: best validation geomean %s\n", format_fixed(r.best_geomean, 4).c_str());
      }
      const auto registry = s.strategy == SplitStrategy::by_permutation ? TestRegistry::allow_permutation_leakage(s.test)
                                                                        : TestRegistry::families_of(s.test);
      const auto model = train(kind_v, train_set, hp, seed, registry);
      write_file(out_path, to_json(model).dump() + "\n");
      if (!importance_path.empty()) {
        std::string text = "feature,importance\n";
        for (const auto& [name, v] : feature_importance(model)) text += name + "," + format_double(v) + "\n";
        write_file(importance_path, text);
      }
    } else if (predict->parsed()) {
      const auto model = selector_from_json(nlohmann::json::parse(read_file(model_path)));
      const auto d = load_dataset(manifest_path);
      const auto ft = load_features(d.manifest, d.base);
      std::vector<InstanceKey> keys = d.table.instances();
      if (!split_path.empty()) keys = split_from_json(nlohmann::json::parse(read_file(split_path))).test;
      const auto st = model.feature_names.size() == feature_names(FeatureStage::StaticOnly).size()
                          ? FeatureStage::StaticOnly
                      : model.feature_names.size() == feature_names(FeatureStage::UpToFirstRootLP).size()
                          ? FeatureStage::UpToFirstRootLP
                          : FeatureStage::UpToRootEnd;
      const std::string fp = feature_fingerprint(feature_names(st));
      std::string text = "family,seed,config\n";
      for (const auto& k : keys) {
        const auto x = row_features(ft.at(k), st);
        text += k.family + "," + std::to_string(k.seed) + "," + model.predict_config(fp, x).to_string() + "\n";
      }
      if (out_path.empty()) std::cout << text;
      else write_file(out_path, text);
    } else if (evaluate->parsed()) {
      const auto model = selector_from_json(nlohmann::json::parse(read_file(model_path)));
      const auto d = load_dataset(manifest_path);
      const auto s = split_from_json(nlohmann::json::parse(read_file(split_path)));
      const auto ft = load_features(d.manifest, d.base);
      FeatureStage st = FeatureStage::StaticOnly;
      for (auto c : {FeatureStage::StaticOnly, FeatureStage::UpToFirstRootLP, FeatureStage::UpToRootEnd})
        if (feature_fingerprint(feature_names(c)) == model.fingerprint) st = c;
      const auto test_set = build_examples(ft, d.table, st, s.test, shift);
      const auto pd = pd_best(d.table.subset(s.train), shift).config;
      const std::size_t pd_ix = d.table.config_index(pd);
      std::vector<double> def_t, pd_t, pred_t;
      for (const auto& e : test_set.examples) {
        const std::size_t i = d.table.instance_index(e.key);
        const auto cfg = model.predict_config(test_set.fingerprint(), e.features);
        def_t.push_back(d.table.time(i, 0));
        pd_t.push_back(d.table.time(i, pd_ix));
        pred_t.push_back(extra_cost(d.table.time(i, d.table.config_index(cfg)), ft.at(e.key).root_time, st,
                                    RootImpactTable{}(cfg)));
      }
      const double g_def = shifted_geomean(def_t, shift), g_pd = shifted_geomean(pd_t, shift),
                   g_pred = shifted_geomean(pred_t, shift);
      std::printf("test instances: %zu\nPD best (train): %s\nDefault: %s\nPD Best: %s\nPredict: %s\n"
                  "Imp. Default: %s\nImp. PD Best: %s\n",
                  test_set.examples.size(), pd.to_string().c_str(), format_fixed(g_def, 2).c_str(),
                  format_fixed(g_pd, 2).c_str(), format_fixed(g_pred, 2).c_str(),
                  format_percent(improvement(g_def, g_pred)).c_str(), format_percent(improvement(g_pd, g_pred)).c_str());
    } else if (suit->parsed()) {
      std::vector<SuitabilityRow> rows_out;
      for (const auto& p : perf_paths)
        rows_out.push_back(suitability(read_perf_csv(read_file(p)), fs::path(p).stem().string(), shift));
      std::cout << (csv ? suitability_csv(rows_out) : suitability_report(rows_out));
    } else if (pipeline->parsed()) {
      RunConfig run;
      run.stage = stage("configuration", [&] { return parse_feature_stage(stage_name); });
      run.kind = stage("configuration", [&] { return parse_model_kind(model_kind); });
      run.strategy = stage("configuration", [&] { return parse_split_strategy(strategy); });
      run.seeds = stage("configuration", [&] { return parse_seed_list(seeds_arg); });
      run.test_fraction = test_frac;
      run.shift = shift;
      run.hyperparams = hp;
      const auto d = stage("load dataset", [&] { return load_dataset(manifest_path); });
      run.dataset = d.manifest.name;
      const auto ft = stage("features", [&] { return load_features(d.manifest, d.base); });
      stage("features", [&] {
        for (const auto& [k, r] : ft) row_features(r, run.stage);
        return 0;
      });
      std::vector<SplitEvaluation> evs;
      for (auto s : run.seeds) {
        const auto sp = stage("split", [&] {
          return make_split(run.strategy, d.manifest, &d.table, run.test_fraction, s, run.shift);
        });
        EvalOptions opt;
        opt.stage = run.stage;
        opt.kind = run.kind;
        opt.hyperparams = run.hyperparams;
        opt.learner_seed = derive_seed(s, 0x1EA4);
        opt.shift = run.shift;
        evs.push_back(stage("train/evaluate", [&] { return evaluate_split(ft, d.table, sp, opt); }));
      }
      const auto report = stage("report", [&] { return summarize(run, std::move(evs)); });
      stage("report", [&] {
        write_file(fs::path(out_dir) / "report.txt", pipeline_report_text(report));
        write_file(fs::path(out_dir) / "report.csv", pipeline_report_csv(report));
        return 0;
      });
      std::cout << pipeline_report_text(report);
    }
  } catch (const StageError& e) {
    std::fprintf(stderr, "error in stage %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
