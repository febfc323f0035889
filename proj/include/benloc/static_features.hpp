#pragma once

// Handcrafted static features: matrix size, variable mix, constraint types
// and scaling. Every value depends only on multisets of rows/columns, so the
// vector is invariant under row/column permutation.

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "benloc/instance.hpp"

namespace benloc {

enum class ConstraintClass {
  SetPartitioning,
  SetPacking,
  SetCovering,
  Cardinality,
  KnapsackEquality,
  Knapsack,
  KnapsackInteger,
  BinaryPacking,
  VariableLowerBound,
  VariableUpperBound,
  MixedBinary,
  MixedInteger,
  Continuous,
};

inline constexpr std::size_t kNumConstraintClasses = 13;

inline constexpr std::array<std::string_view, kNumConstraintClasses> kConstraintClassNames = {
    "SetPartitioning", "SetPacking",         "SetCovering",        "Cardinality", "KnapsackEquality",
    "Knapsack",        "KnapsackInteger",    "BinaryPacking",      "VariableLowerBound",
    "VariableUpperBound", "MixedBinary",     "MixedInteger",       "Continuous"};

inline std::string_view to_string(ConstraintClass c) {
  return kConstraintClassNames[static_cast<std::size_t>(c)];
}

/// First matching rule wins:
///   all-ones over binaries: = 1 partitioning, <= 1 packing, >= 1 covering,
///   = k (integer k >= 2) cardinality; then knapsack variants over integer
///   coefficients, binary packing, two-variable bound rows, and the mixed
///   fallbacks. Rows without nonzeros fall through to Continuous.
inline ConstraintClass classify_constraint(std::span<const RowEntry> row, RowSense sense, double rhs,
                                           std::span<const VarType> var_types) {
  if (row.empty()) return ConstraintClass::Continuous;
  std::size_t n_bin = 0, n_int = 0, n_cont = 0;
  bool all_ones = true, int_coefs = true, nonneg = true, positive = true;
  for (const auto& e : row) {
    switch (var_types[e.col]) {
      case VarType::binary: ++n_bin; break;
      case VarType::integer: ++n_int; break;
      case VarType::continuous: ++n_cont; break;
    }
    if (e.coef != 1.0) all_ones = false;
    if (std::floor(e.coef) != e.coef) int_coefs = false;
    if (e.coef < 0.0) nonneg = false;
    if (e.coef <= 0.0) positive = false;
  }
  const std::size_t len = row.size();
  const bool all_binary = n_bin == len;
  const bool all_integral = n_bin + n_int == len;
  const bool int_rhs = std::floor(rhs) == rhs;

  if (all_binary && all_ones) {
    if (sense == RowSense::eq && rhs == 1.0) return ConstraintClass::SetPartitioning;
    if (sense == RowSense::le && rhs == 1.0) return ConstraintClass::SetPacking;
    if (sense == RowSense::ge && rhs == 1.0) return ConstraintClass::SetCovering;
    if (sense == RowSense::eq && int_rhs && rhs >= 2.0) return ConstraintClass::Cardinality;
  }
  if (all_binary && int_coefs && sense == RowSense::eq) return ConstraintClass::KnapsackEquality;
  if (all_binary && int_coefs && nonneg && sense == RowSense::le) return ConstraintClass::Knapsack;
  if (all_integral && int_coefs && sense == RowSense::le) return ConstraintClass::KnapsackInteger;
  if (all_binary && positive && sense == RowSense::le) return ConstraintClass::BinaryPacking;
  if (len == 2 && n_bin == 1) {
    if (sense == RowSense::ge) return ConstraintClass::VariableLowerBound;
    if (sense == RowSense::le) return ConstraintClass::VariableUpperBound;
  }
  if (n_bin >= 1 && n_cont >= 1) return ConstraintClass::MixedBinary;
  if (n_bin + n_int >= 1) return ConstraintClass::MixedInteger;
  return ConstraintClass::Continuous;
}

/// Fixed column order of the static feature vector.
///
/// Symmetries is always 0: detecting symmetry needs an orbit computation
/// this library does not perform. The column is kept so files line up with
/// feature sets that do carry it.
inline constexpr std::array<std::string_view, 25> kStaticFeatureNames = {
    "Rows",          "Columns",           "NonZeros",           "Symmetries",         "Binaries",
    "Integers",      "LessThan",          "GreaterThan",        "Equality",           "SetPartitioning",
    "SetPacking",    "SetCovering",       "Cardinality",        "KnapsackEquality",   "Knapsack",
    "KnapsackInteger", "BinaryPacking",   "VariableLowerBound", "VariableUpperBound", "MixedBinary",
    "MixedInteger",  "Continuous",        "Coefficient_oom",    "RightHandSide_oom",  "Objective_oom"};

struct StaticFeatureVector {
  static constexpr std::size_t size() { return kStaticFeatureNames.size(); }
  std::array<double, kStaticFeatureNames.size()> values{};

  double operator[](std::size_t i) const { return values[i]; }

  double get(std::string_view name) const {
    for (std::size_t i = 0; i < size(); ++i)
      if (kStaticFeatureNames[i] == name) return values[i];
    throw Error("unknown static feature '" + std::string(name) + "'");
  }

  double constraint_class_ratio(ConstraintClass c) const { return values[9 + static_cast<std::size_t>(c)]; }

  friend bool operator==(const StaticFeatureVector&, const StaticFeatureVector&) = default;
};

namespace detail {

// ln(max|v| / min|v|) over nonzero entries; 0 when there are none.
inline double order_of_magnitude(std::span<const double> vals) {
  double lo = kInf, hi = 0.0;
  for (double v : vals) {
    const double a = std::abs(v);
    if (a == 0.0 || !std::isfinite(a)) continue;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (hi == 0.0 || hi == lo) return 0.0;
  return std::log(hi / lo);
}

}  // namespace detail

/// Class histogram; its entries always sum to the number of rows.
inline std::array<std::size_t, kNumConstraintClasses> constraint_class_counts(const MipInstance& inst) {
  std::array<std::size_t, kNumConstraintClasses> counts{};
  const auto rows = inst.rows();
  for (std::size_t i = 0; i < inst.num_rows(); ++i)
    ++counts[static_cast<std::size_t>(
        classify_constraint(rows[i], inst.row_senses[i], inst.rhs[i], inst.var_types))];
  return counts;
}

inline StaticFeatureVector extract_static(const MipInstance& inst) {
  const std::size_t m = inst.num_rows(), n = inst.num_cols();
  if (m == 0 || n == 0) throw DegenerateInstanceError("static features need m >= 1 and n >= 1");
  StaticFeatureVector f;
  auto& v = f.values;
  const double md = static_cast<double>(m), nd = static_cast<double>(n);
  v[0] = std::log(md);
  v[1] = std::log(nd);
  v[2] = static_cast<double>(inst.nnz()) / (md * nd);
  v[3] = 0.0;

  std::size_t n_bin = 0, n_int = 0;
  for (auto t : inst.var_types) {
    if (t == VarType::binary) ++n_bin;
    else if (t == VarType::integer) ++n_int;
  }
  v[4] = static_cast<double>(n_bin) / nd;
  v[5] = static_cast<double>(n_int) / nd;

  std::array<std::size_t, 3> sense_counts{};
  for (auto s : inst.row_senses) ++sense_counts[static_cast<std::size_t>(s)];
  v[6] = static_cast<double>(sense_counts[static_cast<std::size_t>(RowSense::le)]) / md;
  v[7] = static_cast<double>(sense_counts[static_cast<std::size_t>(RowSense::ge)]) / md;
  v[8] = static_cast<double>(sense_counts[static_cast<std::size_t>(RowSense::eq)]) / md;

  const auto class_counts = constraint_class_counts(inst);
  for (std::size_t c = 0; c < kNumConstraintClasses; ++c)
    v[9 + c] = static_cast<double>(class_counts[c]) / md;

  std::vector<double> coefs;
  coefs.reserve(inst.nnz());
  for (const auto& e : inst.matrix) coefs.push_back(e.coef);
  v[22] = detail::order_of_magnitude(coefs);
  v[23] = detail::order_of_magnitude(inst.rhs);
  v[24] = detail::order_of_magnitude(inst.obj_coeffs);
  return f;
}

}  // namespace benloc
