#pragma once

// Ground-truth performance table and the baseline/improvement arithmetic.

#include <compare>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "benloc/config.hpp"
#include "benloc/log_features.hpp"

namespace benloc {

inline constexpr double kDefaultTimeLimit = 7200.0;
inline constexpr double kDefaultShift = 10.0;

/// One permuted instance: the original problem (family) plus its seed.
struct InstanceKey {
  std::string family;
  std::uint64_t seed = 0;

  std::string to_string() const { return family + ".perm" + std::to_string(seed); }

  friend auto operator<=>(const InstanceKey&, const InstanceKey&) = default;
  friend bool operator==(const InstanceKey&, const InstanceKey&) = default;
};

struct PerfRecord {
  InstanceKey key;
  ConfigId config;
  double time = 0.0;
  SolveStatus status = SolveStatus::optimal;
};

/// Dense (instance x configuration) table of capped solve times. Instances
/// and configurations are kept sorted; configuration order starts with
/// Default.
class PerfTable {
 public:
  PerfTable() = default;

  explicit PerfTable(const std::vector<PerfRecord>& records, double time_limit = kDefaultTimeLimit)
      : time_limit_(time_limit) {
    if (!(time_limit > 0.0)) throw Error("time limit must be positive");
    std::map<InstanceKey, std::size_t> inst_ix;
    std::map<ConfigId, std::size_t> cfg_ix;
    for (const auto& r : records) {
      inst_ix.emplace(r.key, 0);
      cfg_ix.emplace(r.config, 0);
    }
    for (auto& [k, v] : inst_ix) {
      v = instances_.size();
      instances_.push_back(k);
    }
    for (auto& [k, v] : cfg_ix) {
      v = configs_.size();
      configs_.push_back(k);
    }
    const std::size_t nc = configs_.size();
    times_.assign(instances_.size() * nc, -1.0);
    status_.assign(instances_.size() * nc, SolveStatus::error);
    for (const auto& r : records) {
      const std::size_t at = inst_ix[r.key] * nc + cfg_ix[r.config];
      if (times_[at] >= 0.0)
        throw Error("duplicate record for (" + r.key.to_string() + ", " + r.config.to_string() + ")");
      if (!(r.time > 0.0))
        throw Error("non-positive time for (" + r.key.to_string() + ", " + r.config.to_string() + ")");
      times_[at] = std::min(r.time, time_limit_);
      status_[at] = r.time >= time_limit_ ? SolveStatus::time_limit : r.status;
    }
    for (std::size_t i = 0; i < instances_.size(); ++i)
      for (std::size_t c = 0; c < nc; ++c)
        if (times_[i * nc + c] < 0.0)
          throw Error("missing record for (" + instances_[i].to_string() + ", " + configs_[c].to_string() + ")");
    if (!instances_.empty() && (configs_.empty() || !configs_.front().is_default()))
      throw Error("performance table has no Default configuration");
  }

  const std::vector<InstanceKey>& instances() const noexcept { return instances_; }
  const std::vector<ConfigId>& configs() const noexcept { return configs_; }
  std::size_t num_instances() const noexcept { return instances_.size(); }
  std::size_t num_configs() const noexcept { return configs_.size(); }
  double time_limit() const noexcept { return time_limit_; }
  bool empty() const noexcept { return instances_.empty(); }

  /// Index of Default; always 0 for a non-empty table.
  std::size_t default_index() const noexcept { return 0; }

  double time(std::size_t inst, std::size_t cfg) const { return times_.at(inst * configs_.size() + cfg); }
  SolveStatus status(std::size_t inst, std::size_t cfg) const { return status_.at(inst * configs_.size() + cfg); }

  std::optional<std::size_t> find_instance(const InstanceKey& k) const {
    auto it = std::lower_bound(instances_.begin(), instances_.end(), k);
    if (it == instances_.end() || !(*it == k)) return std::nullopt;
    return static_cast<std::size_t>(it - instances_.begin());
  }
  std::size_t instance_index(const InstanceKey& k) const {
    if (auto i = find_instance(k)) return *i;
    throw Error("instance " + k.to_string() + " not in performance table");
  }
  std::size_t config_index(const ConfigId& c) const {
    auto it = std::lower_bound(configs_.begin(), configs_.end(), c);
    if (it == configs_.end() || !(*it == c)) throw Error("configuration " + c.to_string() + " not in table");
    return static_cast<std::size_t>(it - configs_.begin());
  }

  std::vector<double> config_times(std::size_t cfg) const {
    std::vector<double> out(instances_.size());
    for (std::size_t i = 0; i < instances_.size(); ++i) out[i] = time(i, cfg);
    return out;
  }

  std::vector<PerfRecord> records() const {
    std::vector<PerfRecord> out;
    for (std::size_t i = 0; i < instances_.size(); ++i)
      for (std::size_t c = 0; c < configs_.size(); ++c)
        out.push_back({instances_[i], configs_[c], time(i, c), status(i, c)});
    return out;
  }

  /// Restriction to the given instances (same configurations).
  PerfTable subset(const std::vector<InstanceKey>& keys) const {
    std::vector<PerfRecord> recs;
    recs.reserve(keys.size() * configs_.size());
    for (const auto& k : keys) {
      const std::size_t i = instance_index(k);
      for (std::size_t c = 0; c < configs_.size(); ++c) recs.push_back({k, configs_[c], time(i, c), status(i, c)});
    }
    return PerfTable(recs, time_limit_);
  }

 private:
  std::vector<InstanceKey> instances_;
  std::vector<ConfigId> configs_;
  std::vector<double> times_;
  std::vector<SolveStatus> status_;
  double time_limit_ = kDefaultTimeLimit;
};

// CSV: family,seed,config,time,status

inline std::string write_perf_csv(const PerfTable& t) {
  std::ostringstream out;
  out << "family,seed,config,time,status\n";
  for (const auto& r : t.records())
    out << r.key.family << ',' << r.key.seed << ',' << r.config.to_string() << ',' << format_double(r.time) << ','
        << to_string(r.status) << '\n';
  return out.str();
}

inline PerfTable read_perf_csv(std::string_view text, double time_limit = kDefaultTimeLimit) {
  std::vector<PerfRecord> recs;
  std::size_t line_no = 0, pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (header) {
      if (f.size() != 5 || f[0] != "family" || f[1] != "seed" || f[2] != "config" || f[3] != "time" ||
          f[4] != "status")
        throw ParseError(line_no, "expected header family,seed,config,time,status");
      header = false;
      continue;
    }
    if (f.size() != 5) throw ParseError(line_no, "expected 5 fields");
    PerfRecord r;
    r.key.family = f[0];
    double seed;
    if (!parse_double(f[1], seed) || seed < 0 || seed != std::floor(seed)) throw ParseError(line_no, "bad seed");
    r.key.seed = static_cast<std::uint64_t>(seed);
    r.config = ConfigId::parse(f[2]);
    if (!parse_double(f[3], r.time)) throw ParseError(line_no, "bad time");
    r.status = parse_status(f[4]);
    recs.push_back(std::move(r));
  }
  return PerfTable(recs, time_limit);
}

// ---------------------------------------------------------------------------
// Aggregates and baselines
// ---------------------------------------------------------------------------

/// exp(mean(ln(t + shift))) - shift.
inline double shifted_geomean(std::span<const double> times, double shift = kDefaultShift) {
  if (times.empty()) throw Error("shifted geometric mean of an empty list");
  if (shift < 0.0) throw Error("shift must be non-negative");
  double acc = 0.0;
  for (double t : times) {
    if (!(t > 0.0)) throw Error("shifted geometric mean needs positive times");
    acc += std::log(t + shift);
  }
  return std::exp(acc / static_cast<double>(times.size())) - shift;
}

struct BaselineChoice {
  ConfigId config;
  double geomean = 0.0;
};

/// Single configuration with the lowest shifted geometric mean over the table.
inline BaselineChoice pd_best(const PerfTable& t, double shift = kDefaultShift) {
  if (t.empty()) throw Error("pd_best on an empty table");
  BaselineChoice best{t.configs().front(), kInf};
  for (std::size_t c = 0; c < t.num_configs(); ++c) {
    const auto times = t.config_times(c);
    const double g = shifted_geomean(times, shift);
    if (g < best.geomean) best = {t.configs()[c], g};
  }
  return best;
}

struct PerInstanceChoice {
  std::vector<ConfigId> best;  // aligned with PerfTable::instances()
  std::vector<double> times;
  double geomean = 0.0;
};

/// Index of the fastest configuration for one instance (Default wins ties).
inline std::size_t argmin_config(const PerfTable& t, std::size_t inst) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < t.num_configs(); ++c)
    if (t.time(inst, c) < t.time(inst, best)) best = c;
  return best;
}

inline PerInstanceChoice pi_best(const PerfTable& t, double shift = kDefaultShift) {
  if (t.empty()) throw Error("pi_best on an empty table");
  PerInstanceChoice out;
  for (std::size_t i = 0; i < t.num_instances(); ++i) {
    const std::size_t c = argmin_config(t, i);
    out.best.push_back(t.configs()[c]);
    out.times.push_back(t.time(i, c));
  }
  out.geomean = shifted_geomean(out.times, shift);
  return out;
}

inline double default_geomean(const PerfTable& t, double shift = kDefaultShift) {
  return shifted_geomean(t.config_times(t.default_index()), shift);
}

/// (baseline - predicted) / baseline; negative when the prediction is slower.
inline double improvement(double baseline_time, double predict_time) {
  if (!(baseline_time > 0.0)) throw Error("improvement needs a positive baseline");
  return (baseline_time - predict_time) / baseline_time;
}

/// Headroom left for a learned selector: PI-best improvement over Default
/// minus PD-best improvement over Default.
inline double improvement_upper_bound(double pd_best_improvement, double pi_best_improvement) {
  return pi_best_improvement - pd_best_improvement;
}

inline double improvement_upper_bound(const PerfTable& t, double shift = kDefaultShift) {
  const double def = default_geomean(t, shift);
  return improvement_upper_bound(improvement(def, pd_best(t, shift).geomean), improvement(def, pi_best(t, shift).geomean));
}

struct SuitabilityRow {
  std::string dataset;
  std::size_t instance_count = 0;
  double pd_best_improvement = 0.0;
  double pi_best_improvement = 0.0;
  double upper_bound = 0.0;
  ConfigId pd_best_config;
};

inline SuitabilityRow suitability(const PerfTable& t, std::string dataset, double shift = kDefaultShift) {
  SuitabilityRow row;
  row.dataset = std::move(dataset);
  row.instance_count = t.num_instances();
  const double def = default_geomean(t, shift);
  const auto pd = pd_best(t, shift);
  row.pd_best_config = pd.config;
  row.pd_best_improvement = improvement(def, pd.geomean);
  row.pi_best_improvement = improvement(def, pi_best(t, shift).geomean);
  row.upper_bound = improvement_upper_bound(row.pd_best_improvement, row.pi_best_improvement);
  return row;
}

}  // namespace benloc
