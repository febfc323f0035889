#pragma once

// Sparse MIP model, MPS reader/writer and row/column permutation.

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "benloc/common.hpp"

namespace benloc {

enum class ObjSense { minimize, maximize };
enum class RowSense { le, ge, eq };
enum class VarType { continuous, binary, integer };

struct MatrixEntry {
  std::size_t row = 0;
  std::size_t col = 0;
  double coef = 0.0;

  friend bool operator==(const MatrixEntry&, const MatrixEntry&) = default;
};

struct RowEntry {
  std::size_t col;
  double coef;
};

struct MipInstance {
  std::string name;
  ObjSense sense = ObjSense::minimize;
  std::vector<double> obj_coeffs;
  std::vector<MatrixEntry> matrix;  // kept sorted by (col, row)
  std::vector<RowSense> row_senses;
  std::vector<double> rhs;
  std::vector<double> var_lb;
  std::vector<double> var_ub;
  std::vector<VarType> var_types;
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;

  std::size_t num_rows() const noexcept { return row_senses.size(); }
  std::size_t num_cols() const noexcept { return obj_coeffs.size(); }
  std::size_t nnz() const noexcept { return matrix.size(); }

  /// Sorts matrix entries column-major; all producers call this so that
  /// structurally equal models compare equal.
  void normalize() {
    std::sort(matrix.begin(), matrix.end(), [](const MatrixEntry& a, const MatrixEntry& b) {
      return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
  }

  /// Row-wise view of the matrix; entries in each row are ordered by column.
  std::vector<std::vector<RowEntry>> rows() const {
    std::vector<std::vector<RowEntry>> out(num_rows());
    for (const auto& e : matrix) out[e.row].push_back({e.col, e.coef});
    for (auto& r : out)
      std::sort(r.begin(), r.end(), [](const RowEntry& a, const RowEntry& b) { return a.col < b.col; });
    return out;
  }

  /// Throws SemanticError when a type invariant is violated.
  void validate() const {
    const std::size_t m = num_rows(), n = num_cols();
    if (rhs.size() != m || row_names.size() != m)
      throw SemanticError("row arrays have inconsistent lengths");
    if (var_lb.size() != n || var_ub.size() != n || var_types.size() != n || col_names.size() != n)
      throw SemanticError("column arrays have inconsistent lengths");
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(matrix.size());
    for (const auto& e : matrix) {
      if (e.row >= m || e.col >= n) throw SemanticError("matrix entry out of range");
      if (e.coef == 0.0) throw SemanticError("stored coefficient is zero");
      if (!seen.insert((static_cast<std::uint64_t>(e.row) << 32) | e.col).second)
        throw SemanticError("duplicate entry (" + row_names[e.row] + ", " + col_names[e.col] + ")");
    }
    for (std::size_t j = 0; j < n; ++j)
      if (var_types[j] == VarType::binary && (var_lb[j] < 0.0 || var_ub[j] > 1.0))
        throw SemanticError("binary variable " + col_names[j] + " has bounds outside [0, 1]");
  }

  friend bool operator==(const MipInstance&, const MipInstance&) = default;
};

// ---------------------------------------------------------------------------
// MPS reading
// ---------------------------------------------------------------------------

namespace detail {

enum class MpsSection { none, name, objsense, rows, columns, rhs, ranges, bounds, endata };

// Fixed-format MPS field columns (1-based): 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
inline std::vector<std::string_view> fixed_fields(std::string_view line) {
  static constexpr std::pair<std::size_t, std::size_t> spans[] = {
      {1, 2}, {4, 8}, {14, 8}, {24, 12}, {39, 8}, {49, 12}};
  std::vector<std::string_view> out;
  for (auto [start, len] : spans) {
    if (start >= line.size()) {
      out.emplace_back();
      continue;
    }
    out.push_back(trim(line.substr(start, len)));
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline bool is_number(std::string_view s) {
  double v;
  return parse_double(s, v);
}

struct ColumnBuild {
  std::string name;
  VarType type = VarType::continuous;
  double lb = 0.0;
  double ub = kInf;
  bool lb_set = false;
  double obj = 0.0;
};

}  // namespace detail

/// Parses fixed- or free-format MPS. Recoverable oddities (zero
/// coefficients, objective constants) are reported through `warnings`.
inline MipInstance parse_mps(std::string_view text, std::vector<std::string>& warnings) {
  using detail::MpsSection;
  MipInstance inst;

  std::string obj_row;
  bool have_obj = false;
  std::unordered_set<std::string> free_rows;
  std::unordered_map<std::string, std::size_t> row_index;
  std::unordered_map<std::string, std::size_t> col_index;
  std::vector<detail::ColumnBuild> cols;
  std::vector<MatrixEntry> entries;
  std::unordered_set<std::uint64_t> seen_entries;
  std::map<std::size_t, double> ranges;
  bool in_integer_block = false;
  MpsSection section = MpsSection::none;

  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto lookup_row = [&](std::string_view name, std::size_t ln) -> std::optional<std::size_t> {
    const std::string key(name);
    if (auto it = row_index.find(key); it != row_index.end()) return it->second;
    if ((have_obj && key == obj_row) || free_rows.count(key)) return std::nullopt;
    throw SemanticError("line " + std::to_string(ln) + ": undeclared row '" + key + "'");
  };
  auto lookup_col = [&](std::string_view name, std::size_t ln) -> std::size_t {
    if (auto it = col_index.find(std::string(name)); it != col_index.end()) return it->second;
    throw SemanticError("line " + std::to_string(ln) + ": undeclared column '" + std::string(name) + "'");
  };
  auto number = [&](std::string_view tok, std::size_t ln) {
    double v;
    if (!parse_double(tok, v)) throw ParseError(ln, "expected a number, got '" + std::string(tok) + "'");
    return v;
  };

  while (pos < text.size() && section != MpsSection::endata) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty() || line.front() == '*') continue;

    if (line.front() != ' ' && line.front() != '\t') {
      auto toks = split_ws(line);
      const std::string_view kw = toks.front();
      if (kw == "NAME") {
        section = MpsSection::name;
        std::string_view rest = trim(line.substr(4));
        inst.name = std::string(rest);
      } else if (kw == "OBJSENSE") {
        section = MpsSection::objsense;
        if (toks.size() > 1) {
          if (toks[1] == "MAX" || toks[1] == "MAXIMIZE") inst.sense = ObjSense::maximize;
          else if (toks[1] == "MIN" || toks[1] == "MINIMIZE") inst.sense = ObjSense::minimize;
          else throw ParseError(line_no, "bad OBJSENSE value '" + std::string(toks[1]) + "'");
        }
      } else if (kw == "ROWS") {
        section = MpsSection::rows;
      } else if (kw == "COLUMNS") {
        section = MpsSection::columns;
      } else if (kw == "RHS") {
        section = MpsSection::rhs;
      } else if (kw == "RANGES") {
        section = MpsSection::ranges;
      } else if (kw == "BOUNDS") {
        section = MpsSection::bounds;
      } else if (kw == "ENDATA") {
        section = MpsSection::endata;
      } else {
        throw ParseError(line_no, "malformed section header '" + std::string(kw) + "'");
      }
      continue;
    }

    auto toks = split_ws(line);
    switch (section) {
      case MpsSection::none:
      case MpsSection::name:
      case MpsSection::endata:
        throw ParseError(line_no, "data line outside of a section");

      case MpsSection::objsense: {
        if (toks[0] == "MAX" || toks[0] == "MAXIMIZE") inst.sense = ObjSense::maximize;
        else if (toks[0] == "MIN" || toks[0] == "MINIMIZE") inst.sense = ObjSense::minimize;
        else throw ParseError(line_no, "bad OBJSENSE value '" + std::string(toks[0]) + "'");
        break;
      }

      case MpsSection::rows: {
        if (toks.size() != 2) toks = detail::fixed_fields(line);
        if (toks.size() != 2 || toks[0].empty() || toks[1].empty())
          throw ParseError(line_no, "ROWS line needs a type and a name");
        const std::string name(toks[1]);
        if (row_index.count(name) || (have_obj && name == obj_row) || free_rows.count(name))
          throw SemanticError("line " + std::to_string(line_no) + ": duplicate row '" + name + "'");
        const std::string_view type = toks[0];
        if (type == "N") {
          if (!have_obj) {
            obj_row = name;
            have_obj = true;
          } else {
            free_rows.insert(name);
            warnings.push_back("line " + std::to_string(line_no) + ": extra free row '" + name + "' ignored");
          }
          break;
        }
        RowSense sense;
        if (type == "L") sense = RowSense::le;
        else if (type == "G") sense = RowSense::ge;
        else if (type == "E") sense = RowSense::eq;
        else throw ParseError(line_no, "unknown row type '" + std::string(type) + "'");
        row_index.emplace(name, inst.row_names.size());
        inst.row_names.push_back(name);
        inst.row_senses.push_back(sense);
        inst.rhs.push_back(0.0);
        break;
      }

      case MpsSection::columns: {
        if (toks.size() >= 3 && (toks[1] == "'MARKER'" || toks[1] == "MARKER")) {
          if (line.find("'INTORG'") != std::string_view::npos) in_integer_block = true;
          else if (line.find("'INTEND'") != std::string_view::npos) in_integer_block = false;
          else throw ParseError(line_no, "unknown MARKER");
          break;
        }
        const bool free_ok = (toks.size() == 3 && detail::is_number(toks[2])) ||
                             (toks.size() == 5 && detail::is_number(toks[2]) && detail::is_number(toks[4]));
        if (!free_ok) {
          auto f = detail::fixed_fields(line);
          if (f.size() != 4 && f.size() != 6) throw ParseError(line_no, "COLUMNS line needs 3 or 5 fields");
          toks.assign(f.begin() + 1, f.end());
        }
        const std::string cname(toks[0]);
        std::size_t j;
        if (auto it = col_index.find(cname); it != col_index.end()) {
          j = it->second;
        } else {
          j = cols.size();
          col_index.emplace(cname, j);
          detail::ColumnBuild cb;
          cb.name = cname;
          if (in_integer_block) cb.type = VarType::integer;
          cols.push_back(cb);
        }
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const double v = number(toks[k + 1], line_no);
          if (have_obj && toks[k] == obj_row) {
            cols[j].obj = v;
            continue;
          }
          auto r = lookup_row(toks[k], line_no);
          if (!r) continue;
          const std::uint64_t key = (static_cast<std::uint64_t>(*r) << 32) | j;
          if (!seen_entries.insert(key).second)
            throw SemanticError("line " + std::to_string(line_no) + ": duplicate entry (" +
                                std::string(toks[k]) + ", " + cname + ")");
          if (v == 0.0) {
            warnings.push_back("line " + std::to_string(line_no) + ": zero coefficient (" +
                               std::string(toks[k]) + ", " + cname + ") dropped");
            continue;
          }
          entries.push_back({*r, j, v});
        }
        break;
      }

      case MpsSection::rhs:
      case MpsSection::ranges: {
        // Accept "set row val [row val]" and "row val [row val]".
        std::size_t first = 0;
        if (toks.size() == 3 || toks.size() == 5) first = 1;
        else if (toks.size() == 2 || toks.size() == 4) first = 0;
        bool ok = toks.size() >= 2 && detail::is_number(toks[first + 1]);
        if (!ok) {
          auto f = detail::fixed_fields(line);
          if (f.size() != 4 && f.size() != 6) throw ParseError(line_no, "bad RHS/RANGES line");
          toks.assign(f.begin() + 2, f.end());
          first = 0;
        }
        for (std::size_t k = first; k + 1 < toks.size(); k += 2) {
          const double v = number(toks[k + 1], line_no);
          if (have_obj && toks[k] == obj_row) {
            if (section == MpsSection::rhs && v != 0.0)
              warnings.push_back("line " + std::to_string(line_no) + ": objective constant ignored");
            continue;
          }
          auto r = lookup_row(toks[k], line_no);
          if (!r) continue;
          if (section == MpsSection::rhs) inst.rhs[*r] = v;
          else ranges[*r] = v;
        }
        break;
      }

      case MpsSection::bounds: {
        if (toks.empty()) break;
        const std::string_view type = toks[0];
        const bool needs_value = type == "UP" || type == "LO" || type == "FX" || type == "LI" || type == "UI";
        std::string_view cname;
        std::optional<double> value;
        if (needs_value) {
          if (toks.size() == 4 && detail::is_number(toks[3])) {
            cname = toks[2];
            value = number(toks[3], line_no);
          } else if (toks.size() == 3 && detail::is_number(toks[2])) {
            cname = toks[1];
            value = number(toks[2], line_no);
          } else {
            auto f = detail::fixed_fields(line);
            if (f.size() < 4) throw ParseError(line_no, "bound needs a value");
            cname = f[2];
            value = number(f[3], line_no);
          }
        } else {
          if (toks.size() == 3 || (toks.size() == 4 && detail::is_number(toks[3]))) cname = toks[2];
          else if (toks.size() == 2) cname = toks[1];
          else {
            auto f = detail::fixed_fields(line);
            if (f.size() < 3) throw ParseError(line_no, "bad BOUNDS line");
            cname = f[2];
          }
        }
        auto& c = cols[lookup_col(cname, line_no)];
        if (type == "UP") {
          c.ub = *value;
          if (*value < 0.0 && c.lb == 0.0 && !c.lb_set) {
            c.lb = -kInf;
            warnings.push_back("line " + std::to_string(line_no) + ": negative upper bound on '" +
                               c.name + "' sets lower bound to -inf");
          }
        } else if (type == "LO") {
          c.lb = *value;
          c.lb_set = true;
        } else if (type == "FX") {
          c.lb = c.ub = *value;
          c.lb_set = true;
        } else if (type == "FR") {
          c.lb = -kInf;
          c.ub = kInf;
          c.lb_set = true;
        } else if (type == "MI") {
          c.lb = -kInf;
          c.lb_set = true;
        } else if (type == "PL") {
          c.ub = kInf;
        } else if (type == "BV") {
          c.type = VarType::integer;
          c.lb = 0.0;
          c.ub = 1.0;
          c.lb_set = true;
        } else if (type == "LI") {
          c.type = VarType::integer;
          c.lb = *value;
          c.lb_set = true;
        } else if (type == "UI") {
          c.type = VarType::integer;
          c.ub = *value;
        } else {
          throw ParseError(line_no, "unsupported bound type '" + std::string(type) + "'");
        }
        break;
      }
    }
  }
  if (!have_obj) throw ParseError(line_no, "no objective (N) row declared");

  // RANGES: keep the original row for one side, append a row for the other.
  const std::size_t m0 = inst.num_rows();
  std::vector<std::vector<RowEntry>> row_lists;
  if (!ranges.empty()) {
    row_lists.resize(m0);
    for (const auto& e : entries) row_lists[e.row].push_back({e.col, e.coef});
  }
  for (const auto& [r, range] : ranges) {
    const double b = inst.rhs[r];
    double lower, upper;
    switch (inst.row_senses[r]) {
      case RowSense::ge: lower = b; upper = b + std::abs(range); break;
      case RowSense::le: lower = b - std::abs(range); upper = b; break;
      case RowSense::eq:
        if (range == 0.0) continue;
        lower = range > 0 ? b : b + range;
        upper = range > 0 ? b + range : b;
        break;
    }
    const std::size_t added = inst.num_rows();
    if (inst.row_senses[r] == RowSense::le) {
      inst.row_senses.push_back(RowSense::ge);
      inst.rhs.push_back(lower);
    } else {
      inst.row_senses[r] = RowSense::ge;
      inst.rhs[r] = lower;
      inst.row_senses.push_back(RowSense::le);
      inst.rhs.push_back(upper);
    }
    inst.row_names.push_back(inst.row_names[r] + "_rng");
    for (const auto& re : row_lists[r]) entries.push_back({added, re.col, re.coef});
  }

  const std::size_t n = cols.size();
  inst.obj_coeffs.resize(n);
  inst.var_lb.resize(n);
  inst.var_ub.resize(n);
  inst.var_types.resize(n);
  inst.col_names.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& c = cols[j];
    inst.obj_coeffs[j] = c.obj;
    inst.var_lb[j] = c.lb;
    inst.var_ub[j] = c.ub;
    inst.col_names[j] = c.name;
    VarType t = c.type;
    if (t == VarType::integer && c.lb == 0.0 && c.ub == 1.0) t = VarType::binary;
    inst.var_types[j] = t;
  }
  inst.matrix = std::move(entries);
  inst.normalize();
  inst.validate();
  return inst;
}

inline MipInstance parse_mps(std::string_view text) {
  std::vector<std::string> ignored;
  return parse_mps(text, ignored);
}

// ---------------------------------------------------------------------------
// MPS writing
// ---------------------------------------------------------------------------

/// Free-format MPS. Output is a pure function of the instance.
inline std::string write_mps(const MipInstance& inst) {
  std::ostringstream out;
  std::unordered_set<std::string> names(inst.row_names.begin(), inst.row_names.end());
  std::string obj = "obj";
  while (names.count(obj)) obj += "_";

  out << "NAME";
  if (!inst.name.empty()) out << "          " << inst.name;
  out << "\n";
  if (inst.sense == ObjSense::maximize) out << "OBJSENSE\n    MAX\n";
  out << "ROWS\n";
  out << " N  " << obj << "\n";
  for (std::size_t i = 0; i < inst.num_rows(); ++i) {
    const char* t = inst.row_senses[i] == RowSense::le ? "L" : inst.row_senses[i] == RowSense::ge ? "G" : "E";
    out << " " << t << "  " << inst.row_names[i] << "\n";
  }

  std::vector<std::vector<std::pair<std::size_t, double>>> by_col(inst.num_cols());
  for (const auto& e : inst.matrix) by_col[e.col].push_back({e.row, e.coef});
  for (auto& c : by_col) std::sort(c.begin(), c.end());

  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (std::size_t j = 0; j < inst.num_cols(); ++j) {
    const bool is_int = inst.var_types[j] != VarType::continuous;
    if (is_int != in_int) {
      out << "    MARKER" << marker++ << "  'MARKER'  " << (is_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = is_int;
    }
    const std::string& cname = inst.col_names[j];
    if (inst.obj_coeffs[j] != 0.0 || by_col[j].empty())
      out << "    " << cname << "  " << obj << "  " << format_double(inst.obj_coeffs[j]) << "\n";
    for (const auto& [r, v] : by_col[j])
      out << "    " << cname << "  " << inst.row_names[r] << "  " << format_double(v) << "\n";
  }
  if (in_int) out << "    MARKER" << marker++ << "  'MARKER'  'INTEND'\n";

  out << "RHS\n";
  for (std::size_t i = 0; i < inst.num_rows(); ++i)
    if (inst.rhs[i] != 0.0) out << "    RHS  " << inst.row_names[i] << "  " << format_double(inst.rhs[i]) << "\n";

  out << "BOUNDS\n";
  for (std::size_t j = 0; j < inst.num_cols(); ++j) {
    const std::string& cname = inst.col_names[j];
    const double lb = inst.var_lb[j], ub = inst.var_ub[j];
    if (inst.var_types[j] == VarType::binary) {
      out << " BV BND  " << cname << "\n";
      continue;
    }
    if (lb == -kInf && ub == kInf) {
      out << " FR BND  " << cname << "\n";
      continue;
    }
    if (lb == ub) {
      out << " FX BND  " << cname << "  " << format_double(lb) << "\n";
      continue;
    }
    if (lb == -kInf) out << " MI BND  " << cname << "\n";
    else if (lb != 0.0 || ub < 0.0) out << " LO BND  " << cname << "  " << format_double(lb) << "\n";
    if (ub != kInf) out << " UP BND  " << cname << "  " << format_double(ub) << "\n";
  }
  out << "ENDATA\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Permutation
// ---------------------------------------------------------------------------

/// row_perm[i] is the new index of original row i; likewise for columns.
struct PermutationRecord {
  std::vector<std::size_t> row_perm;
  std::vector<std::size_t> col_perm;
  std::uint64_t seed = 0;

  static PermutationRecord identity(std::size_t m, std::size_t n, std::uint64_t seed = 0) {
    PermutationRecord rec;
    rec.row_perm.resize(m);
    rec.col_perm.resize(n);
    std::iota(rec.row_perm.begin(), rec.row_perm.end(), std::size_t{0});
    std::iota(rec.col_perm.begin(), rec.col_perm.end(), std::size_t{0});
    rec.seed = seed;
    return rec;
  }

  bool is_valid() const {
    auto check = [](const std::vector<std::size_t>& p) {
      std::vector<char> hit(p.size(), 0);
      for (auto v : p) {
        if (v >= p.size() || hit[v]) return false;
        hit[v] = 1;
      }
      return true;
    };
    return check(row_perm) && check(col_perm);
  }

  friend bool operator==(const PermutationRecord&, const PermutationRecord&) = default;
};

/// Applies `first` then `second`.
inline PermutationRecord compose(const PermutationRecord& first, const PermutationRecord& second) {
  if (first.row_perm.size() != second.row_perm.size() || first.col_perm.size() != second.col_perm.size())
    throw Error("cannot compose permutations of different sizes");
  PermutationRecord out;
  out.row_perm.resize(first.row_perm.size());
  out.col_perm.resize(first.col_perm.size());
  for (std::size_t i = 0; i < out.row_perm.size(); ++i) out.row_perm[i] = second.row_perm[first.row_perm[i]];
  for (std::size_t j = 0; j < out.col_perm.size(); ++j) out.col_perm[j] = second.col_perm[first.col_perm[j]];
  out.seed = second.seed;
  return out;
}

inline MipInstance apply_permutation(const MipInstance& inst, const PermutationRecord& rec) {
  const std::size_t m = inst.num_rows(), n = inst.num_cols();
  if (rec.row_perm.size() != m || rec.col_perm.size() != n || !rec.is_valid())
    throw Error("permutation does not match instance dimensions");
  MipInstance out;
  out.name = inst.name;
  out.sense = inst.sense;
  out.obj_coeffs.resize(n);
  out.var_lb.resize(n);
  out.var_ub.resize(n);
  out.var_types.resize(n);
  out.col_names.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t t = rec.col_perm[j];
    out.obj_coeffs[t] = inst.obj_coeffs[j];
    out.var_lb[t] = inst.var_lb[j];
    out.var_ub[t] = inst.var_ub[j];
    out.var_types[t] = inst.var_types[j];
    out.col_names[t] = inst.col_names[j];
  }
  out.row_senses.resize(m);
  out.rhs.resize(m);
  out.row_names.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t t = rec.row_perm[i];
    out.row_senses[t] = inst.row_senses[i];
    out.rhs[t] = inst.rhs[i];
    out.row_names[t] = inst.row_names[i];
  }
  out.matrix.reserve(inst.nnz());
  for (const auto& e : inst.matrix) out.matrix.push_back({rec.row_perm[e.row], rec.col_perm[e.col], e.coef});
  out.normalize();
  return out;
}

/// Seed 0 is the identity. Other seeds seed an mt19937_64 and shuffle the
/// row order, then the column order, with Fisher-Yates from the back.
inline std::pair<MipInstance, PermutationRecord> permute_instance(const MipInstance& inst, std::uint64_t seed) {
  PermutationRecord rec = PermutationRecord::identity(inst.num_rows(), inst.num_cols(), seed);
  if (seed == 0) return {inst, rec};
  Engine eng(seed);
  shuffle(rec.row_perm, eng);
  shuffle(rec.col_perm, eng);
  return {apply_permutation(inst, rec), rec};
}

}  // namespace benloc
