#pragma once

// Dataset manifest and train/test splitting over permutation families.

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "benloc/metrics.hpp"

namespace benloc {

inline constexpr double kDefaultTestFraction = 0.2;

struct InstanceRef {
  std::uint64_t seed = 0;
  std::string path;  // relative to the manifest directory
};

struct Family {
  std::string id;
  std::vector<InstanceRef> instances;
};

struct DatasetManifest {
  std::string name;
  std::vector<Family> families;
  std::string perf_table;     // CSV path, may be empty
  std::string feature_store;  // CSV path, may be empty
  std::string logs_dir;       // directory with <family>.perm<seed>.<config>.log
  double time_limit = kDefaultTimeLimit;

  /// Throws if a family repeats a seed or if family ids collide.
  void validate() const {
    std::set<std::string> ids;
    for (const auto& f : families) {
      if (!ids.insert(f.id).second) throw Error("duplicate family id '" + f.id + "'");
      std::set<std::uint64_t> seeds;
      for (const auto& r : f.instances)
        if (!seeds.insert(r.seed).second)
          throw Error("family '" + f.id + "' repeats seed " + std::to_string(r.seed));
    }
  }

  /// Throws if any referenced instance file is missing under `base`.
  void validate_files(const std::filesystem::path& base) const {
    for (const auto& f : families)
      for (const auto& r : f.instances)
        if (!r.path.empty() && !std::filesystem::exists(base / r.path))
          throw Error("missing instance file " + (base / r.path).string());
    if (!perf_table.empty() && !std::filesystem::exists(base / perf_table))
      throw Error("missing performance table " + (base / perf_table).string());
  }

  std::vector<InstanceKey> keys() const {
    std::vector<InstanceKey> out;
    for (const auto& f : families)
      for (const auto& r : f.instances) out.push_back({f.id, r.seed});
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& f : families) n += f.instances.size();
    return n;
  }

  /// Manifest with one family per distinct family id of the table.
  static DatasetManifest from_table(const PerfTable& t, std::string name = "dataset") {
    DatasetManifest m;
    m.name = std::move(name);
    m.time_limit = t.time_limit();
    for (const auto& k : t.instances()) {
      if (m.families.empty() || m.families.back().id != k.family) m.families.push_back({k.family, {}});
      m.families.back().instances.push_back({k.seed, ""});
    }
    return m;
  }
};

inline nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json j;
  j["name"] = m.name;
  j["perf_table"] = m.perf_table;
  j["feature_store"] = m.feature_store;
  j["logs_dir"] = m.logs_dir;
  j["time_limit"] = m.time_limit;
  j["families"] = nlohmann::json::array();
  for (const auto& f : m.families) {
    nlohmann::json jf;
    jf["id"] = f.id;
    jf["instances"] = nlohmann::json::array();
    for (const auto& r : f.instances) jf["instances"].push_back({{"seed", r.seed}, {"path", r.path}});
    j["families"].push_back(jf);
  }
  return j;
}

inline DatasetManifest manifest_from_json(const nlohmann::json& j) {
  DatasetManifest m;
  m.name = j.value("name", "");
  m.perf_table = j.value("perf_table", "");
  m.feature_store = j.value("feature_store", "");
  m.logs_dir = j.value("logs_dir", "");
  m.time_limit = j.value("time_limit", kDefaultTimeLimit);
  for (const auto& jf : j.at("families")) {
    Family f;
    f.id = jf.at("id").get<std::string>();
    for (const auto& r : jf.at("instances"))
      f.instances.push_back({r.at("seed").get<std::uint64_t>(), r.value("path", "")});
    m.families.push_back(std::move(f));
  }
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

enum class SplitStrategy { by_instance, by_permutation, stratified };

inline std::string_view to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::by_instance: return "by_instance";
    case SplitStrategy::by_permutation: return "by_permutation";
    case SplitStrategy::stratified: return "stratified";
  }
  return "by_instance";
}

inline SplitStrategy parse_split_strategy(std::string_view s) {
  if (s == "by_instance") return SplitStrategy::by_instance;
  if (s == "by_permutation") return SplitStrategy::by_permutation;
  if (s == "stratified") return SplitStrategy::stratified;
  throw Error("unknown split strategy '" + std::string(s) + "'");
}

struct SplitAssignment {
  std::vector<InstanceKey> train;
  std::vector<InstanceKey> test;
  SplitStrategy strategy = SplitStrategy::by_instance;
  std::uint64_t seed = 0;
  double test_fraction = kDefaultTestFraction;

  std::set<std::string> train_families() const {
    std::set<std::string> s;
    for (const auto& k : train) s.insert(k.family);
    return s;
  }
  std::set<std::string> test_families() const {
    std::set<std::string> s;
    for (const auto& k : test) s.insert(k.family);
    return s;
  }

  /// Share of test instances whose family also has instances in training.
  double leakage() const {
    if (test.empty()) return 0.0;
    const auto tf = train_families();
    std::size_t leaked = 0;
    for (const auto& k : test) leaked += tf.count(k.family);
    return static_cast<double>(leaked) / static_cast<double>(test.size());
  }

  std::size_t family_overlap() const {
    const auto a = train_families(), b = test_families();
    std::size_t n = 0;
    for (const auto& f : b) n += a.count(f);
    return n;
  }
};

inline nlohmann::json to_json(const SplitAssignment& s) {
  auto keys = [](const std::vector<InstanceKey>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& k : v) a.push_back({k.family, k.seed});
    return a;
  };
  nlohmann::json j;
  j["strategy"] = std::string(to_string(s.strategy));
  j["seed"] = s.seed;
  j["test_fraction"] = s.test_fraction;
  j["train"] = keys(s.train);
  j["test"] = keys(s.test);
  return j;
}

inline SplitAssignment split_from_json(const nlohmann::json& j) {
  auto keys = [](const nlohmann::json& a) {
    std::vector<InstanceKey> v;
    for (const auto& e : a) v.push_back({e.at(0).get<std::string>(), e.at(1).get<std::uint64_t>()});
    return v;
  };
  SplitAssignment s;
  s.strategy = parse_split_strategy(j.at("strategy").get<std::string>());
  s.seed = j.at("seed").get<std::uint64_t>();
  s.test_fraction = j.at("test_fraction").get<double>();
  s.train = keys(j.at("train"));
  s.test = keys(j.at("test"));
  return s;
}

namespace detail {

// round(fraction * n) clamped so both sides are non-empty.
inline std::size_t test_count(std::size_t n, double fraction) {
  const auto t = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(t, 1, n - 1);
}

inline void check_fraction(double f) {
  if (!(f > 0.0 && f < 1.0)) throw Error("test fraction must be in (0, 1)");
}

inline SplitAssignment assign_families(const DatasetManifest& m, const std::set<std::string>& test_families,
                                       SplitStrategy strategy, double fraction, std::uint64_t seed) {
  SplitAssignment s;
  s.strategy = strategy;
  s.seed = seed;
  s.test_fraction = fraction;
  for (const auto& f : m.families)
    for (const auto& r : f.instances) (test_families.count(f.id) ? s.test : s.train).push_back({f.id, r.seed});
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace detail

/// Whole families go to one side. Families are shuffled with
/// mt19937_64(seed); the first round(fraction * F) become the test set.
inline SplitAssignment split_by_instance(const DatasetManifest& m, double test_fraction = kDefaultTestFraction,
                                         std::uint64_t seed = 0) {
  detail::check_fraction(test_fraction);
  if (m.families.size() < 2) throw Error("split_by_instance needs at least 2 families");
  std::vector<std::size_t> order(m.families.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine eng(seed);
  shuffle(order, eng);
  const std::size_t nt = detail::test_count(order.size(), test_fraction);
  std::set<std::string> test;
  for (std::size_t k = 0; k < nt; ++k) test.insert(m.families[order[k]].id);
  return detail::assign_families(m, test, SplitStrategy::by_instance, test_fraction, seed);
}

/// Individual (family, seed) pairs are assigned independently. Permutations
/// of one problem land on both sides, which leaks family identity into the
/// test set; kept to measure that effect.
inline SplitAssignment split_by_permutation(const DatasetManifest& m, double test_fraction = kDefaultTestFraction,
                                            std::uint64_t seed = 0) {
  detail::check_fraction(test_fraction);
  if (m.families.size() < 2) throw Error("split_by_permutation needs at least 2 families");
  auto keys = m.keys();
  Engine eng(seed);
  shuffle(keys, eng);
  const std::size_t nt = detail::test_count(keys.size(), test_fraction);
  SplitAssignment s;
  s.strategy = SplitStrategy::by_permutation;
  s.seed = seed;
  s.test_fraction = test_fraction;
  s.test.assign(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(nt));
  s.train.assign(keys.begin() + static_cast<std::ptrdiff_t>(nt), keys.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

/// Family-level split that keeps strata proportions. A family's stratum is
/// (its best configuration by shifted geomean over its permutations, the
/// quartile of ln(default geomean) among families). Test slots are
/// apportioned to strata by largest remainder, so each stratum is within
/// one family of its exact share.
inline SplitAssignment stratified_split(const DatasetManifest& m, const PerfTable* table,
                                        double test_fraction = kDefaultTestFraction, std::uint64_t seed = 0,
                                        double shift = kDefaultShift) {
  detail::check_fraction(test_fraction);
  if (table == nullptr || table->empty()) throw Error("stratified_split needs a performance table");
  if (m.families.size() < 2) throw Error("stratified_split needs at least 2 families");

  const std::size_t nf = m.families.size();
  std::vector<std::string> label(nf);
  std::vector<double> log_default(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    std::vector<InstanceKey> keys;
    for (const auto& r : m.families[f].instances) keys.push_back({m.families[f].id, r.seed});
    const PerfTable sub = table->subset(keys);
    label[f] = pd_best(sub, shift).config.to_string();
    log_default[f] = std::log(default_geomean(sub, shift));
  }

  // Quartile cut points (linear interpolation between order statistics).
  std::vector<double> sorted = log_default;
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double cuts[3] = {quantile(0.25), quantile(0.5), quantile(0.75)};

  std::map<std::pair<std::string, int>, std::vector<std::size_t>> strata;
  for (std::size_t f = 0; f < nf; ++f) {
    int bucket = 0;
    for (double c : cuts) bucket += log_default[f] > c ? 1 : 0;
    strata[{label[f], bucket}].push_back(f);
  }

  const std::size_t total_test = detail::test_count(nf, test_fraction);
  std::vector<std::size_t> quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0, s_ix = 0;
  for (const auto& [key, members] : strata) {
    const double exact = test_fraction * static_cast<double>(members.size());
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quota.push_back(base);
    assigned += base;
    remainders.push_back({exact - static_cast<double>(base), s_ix++});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total_test && k < remainders.size(); ++k, ++assigned)
    ++quota[remainders[k].second];

  Engine eng(seed);
  std::set<std::string> test;
  s_ix = 0;
  for (const auto& [key, members] : strata) {
    std::vector<std::size_t> order = members;
    shuffle(order, eng);
    for (std::size_t k = 0; k < quota[s_ix] && k < order.size(); ++k) test.insert(m.families[order[k]].id);
    ++s_ix;
  }
  return detail::assign_families(m, test, SplitStrategy::stratified, test_fraction, seed);
}

inline SplitAssignment make_split(SplitStrategy strategy, const DatasetManifest& m, const PerfTable* table,
                                  double test_fraction, std::uint64_t seed, double shift = kDefaultShift) {
  switch (strategy) {
    case SplitStrategy::by_instance: return split_by_instance(m, test_fraction, seed);
    case SplitStrategy::by_permutation: return split_by_permutation(m, test_fraction, seed);
    case SplitStrategy::stratified: return stratified_split(m, table, test_fraction, seed, shift);
  }
  throw Error("unknown split strategy");
}

}  // namespace benloc
