#pragma once

#include <array>
#include <compare>
#include <string>
#include <string_view>

#include "benloc/common.hpp"

namespace benloc {

enum class Param {
  RootCutLevel,
  TreeCutLevel,
  RoundingHeurLevel,
  DivingHeurLevel,
  SubMipHeurLevel,
  StrongBranching,
};

inline constexpr std::array<std::string_view, 6> kParamNames = {
    "RootCutLevel", "TreeCutLevel", "RoundingHeurLevel", "DivingHeurLevel", "SubMipHeurLevel", "StrongBranching"};

/// Either the solver default or exactly one parameter moved to a level in
/// {-1, 0, 1, 2, 3}, all others left at their defaults.
class ConfigId {
 public:
  ConfigId() = default;
  ConfigId(Param p, int level) : is_default_(false), param_(p), level_(level) {
    if (level < -1 || level > 3) throw Error("parameter level must be in -1..3, got " + std::to_string(level));
  }

  static ConfigId default_config() { return {}; }

  bool is_default() const noexcept { return is_default_; }
  Param param() const noexcept { return param_; }
  int level() const noexcept { return level_; }

  /// "Default" or "<Param>=<level>".
  std::string to_string() const {
    if (is_default_) return "Default";
    return std::string(kParamNames[static_cast<std::size_t>(param_)]) + "=" + std::to_string(level_);
  }

  /// Filesystem-friendly form: "Default" or "<Param>_<level>".
  std::string file_tag() const {
    if (is_default_) return "Default";
    return std::string(kParamNames[static_cast<std::size_t>(param_)]) + "_" + std::to_string(level_);
  }

  static ConfigId parse(std::string_view s) {
    s = trim(s);
    if (s == "Default" || s == "default") return {};
    auto sep = s.find('=');
    if (sep == std::string_view::npos) sep = s.rfind('_');
    if (sep == std::string_view::npos) throw Error("bad configuration id '" + std::string(s) + "'");
    const auto name = s.substr(0, sep);
    const auto lvl = s.substr(sep + 1);
    for (std::size_t p = 0; p < kParamNames.size(); ++p) {
      if (kParamNames[p] != name) continue;
      double v;
      if (!parse_double(lvl, v) || v != std::floor(v)) throw Error("bad level in '" + std::string(s) + "'");
      return ConfigId(static_cast<Param>(p), static_cast<int>(v));
    }
    throw Error("unknown parameter in '" + std::string(s) + "'");
  }

  friend bool operator==(const ConfigId& a, const ConfigId& b) {
    if (a.is_default_ || b.is_default_) return a.is_default_ == b.is_default_;
    return a.param_ == b.param_ && a.level_ == b.level_;
  }

  /// Default sorts first, everything else by its string form. Argmin scans
  /// in this order, which yields the documented tie-break.
  friend std::strong_ordering operator<=>(const ConfigId& a, const ConfigId& b) {
    if (a.is_default_ != b.is_default_) return a.is_default_ ? std::strong_ordering::less : std::strong_ordering::greater;
    if (a.is_default_) return std::strong_ordering::equal;
    return a.to_string().compare(b.to_string()) <=> 0;
  }

 private:
  bool is_default_ = true;
  Param param_ = Param::RootCutLevel;
  int level_ = -1;
};

/// Which parameters act on root-node processing. Changing one of them after
/// root-end features were collected means the root has to be solved again.
struct RootImpactTable {
  std::array<bool, 6> affects_root = {
      true,   // RootCutLevel
      false,  // TreeCutLevel
      true,   // RoundingHeurLevel
      true,   // DivingHeurLevel
      true,   // SubMipHeurLevel
      true,   // StrongBranching
  };

  bool operator()(const ConfigId& c) const {
    if (c.is_default()) return false;
    return affects_root[static_cast<std::size_t>(c.param())];
  }
};

}  // namespace benloc
