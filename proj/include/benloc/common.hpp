#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <thread>
#include <vector>

namespace benloc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Syntax problem in an input file; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a model-level rule (unknown names, duplicates).
class SemanticError : public Error {
 public:
  using Error::Error;
};

class DegenerateInstanceError : public Error {
 public:
  using Error::Error;
};

class IncompleteLogError : public Error {
 public:
  using Error::Error;
};

class LogSchemaError : public Error {
 public:
  using Error::Error;
};

class MissingStageError : public Error {
 public:
  using Error::Error;
};

class FingerprintMismatchError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

/// Training examples that share a family with the declared test set.
class LeakageError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Random numbers
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The standard distributions are not portable across library
// implementations, so every draw below is derived from raw engine output.
// ---------------------------------------------------------------------------

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ mix64(index + 0x632BE59BD9B4E019ULL));
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Unbiased integer in [0, bound) by rejection.
inline std::uint64_t uniform_below(Engine& eng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = eng();
  } while (r >= limit);
  return r % bound;
}

/// Standard normal via Box-Muller (one value per call).
inline double standard_normal(Engine& eng) {
  double u1 = uniform01(eng);
  while (u1 <= 0.0) u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

/// Fisher-Yates, drawing from the back.
template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(eng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// ---------------------------------------------------------------------------
// Text helpers
// ---------------------------------------------------------------------------

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

/// Fixed-point with the C library's round-half-even on the exact binary value.
inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// Fraction rendered as a percentage with two decimals, e.g. 0.0249 -> "2.49%".
inline std::string format_percent(double fraction) {
  return format_fixed(fraction * 100.0, 2) + "%";
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s == "inf" || s == "+inf" || s == "Inf" || s == "infinity") {
    out = kInf;
    return true;
  }
  if (s == "-inf" || s == "-Inf" || s == "-infinity") {
    out = -kInf;
    return true;
  }
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// ---------------------------------------------------------------------------
// Parallelism
// ---------------------------------------------------------------------------

/// Worker count: BENLOC_THREADS if set and positive, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BENLOC_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return hw;
}

/// Runs body(i) for i in [0, n), strided across workers. Bodies must only
/// write to slot i so results do not depend on scheduling.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += workers) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace benloc
