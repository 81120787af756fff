#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace patcard {

//---------------------------------------------------------------------------
// errors
//---------------------------------------------------------------------------

/// Base class of every error thrown by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Syntax error; `pos` is a byte offset into the statement text.
struct ParseError : Error {
  size_t pos;
  ParseError(const std::string& msg, size_t p)
      : Error(msg + " (at offset " + std::to_string(p) + ")"), pos(p) {}
};

/// Statement is well-formed but inconsistent with the bound schema.
struct SemanticError : Error {
  using Error::Error;
};

/// Malformed cell while loading data; positions are 1-based.
struct TypeError : Error {
  TypeError(const std::string& msg, size_t row, const std::string& col)
      : Error(msg + " (row " + std::to_string(row) + " col " + col + ")") {}
};

struct SchemaError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct CycleError : Error {
  using Error::Error;
};

/// A bucket received a feature vector of the wrong width.  This signals a
/// canonicalization bug and must never be coerced away.
struct DimMismatch : Error {
  using Error::Error;
};

struct EmptyHistory : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct MissingStats : Error {
  using Error::Error;
};

struct InternalError : Error {
  using Error::Error;
};

//---------------------------------------------------------------------------
// 256-bit digests
//---------------------------------------------------------------------------

using Digest256 = std::array<unsigned char, 32>;

/// Incremental SHA-256.  One instance is reusable across messages; not
/// thread-safe (use one per thread).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void reset();
  void update(const void* data, size_t len);
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update_u32(uint32_t v);
  /// Appends a 32-bit length prefix and then the bytes.
  void update_sized(std::string_view s);
  Digest256 finish();

 private:
  void* ctx_;
};

Digest256 sha256(std::string_view data);

std::string hex(const Digest256& d);

/// Hash functor for digest-keyed maps; digests are uniform so the first
/// eight bytes suffice.
struct DigestKey {
  size_t operator()(const Digest256& d) const {
    size_t h;
    static_assert(sizeof h <= 32);
    __builtin_memcpy(&h, d.data(), sizeof h);
    return h;
  }
};

//---------------------------------------------------------------------------
// dates
//---------------------------------------------------------------------------

/// Days since 1970-01-01 for a proleptic Gregorian date.
int64_t days_from_civil(int y, int m, int d);
void civil_from_days(int64_t days, int& y, int& m, int& d);

/// Parses strict `YYYY-MM-DD`; throws Error on malformed input.
int64_t parse_date(std::string_view s);
bool looks_like_date(std::string_view s);
std::string format_date(int64_t days);

//---------------------------------------------------------------------------
// numbers and text
//---------------------------------------------------------------------------

/// Shortest decimal form that round-trips the exact double.
std::string fmt_double(double v);

std::string to_lower(std::string_view s);

bool parse_i64(std::string_view s, int64_t& out);
bool parse_f64(std::string_view s, double& out);

//---------------------------------------------------------------------------
// csv
//---------------------------------------------------------------------------

/// Minimal RFC-4180 writer: fields containing comma, quote or newline are
/// quoted, quotes doubled.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  void row(const std::vector<std::string>& fields);
  void flush_close();

 private:
  void* f_;
  std::string buf_;
  std::string path_;
};

/// Reads a whole CSV file into rows of string fields.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

//---------------------------------------------------------------------------
// deterministic random draws
//---------------------------------------------------------------------------

/// Wraps mt19937_64 with fixed draw algorithms so generated artifacts do not
/// depend on standard-library distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : g_(seed) {}

  uint64_t next() { return g_(); }

  /// Uniform in [0, n), unbiased (rejection sampling).
  uint64_t below(uint64_t n);

  /// Uniform integer in [lo, hi], inclusive.
  int64_t range(int64_t lo, int64_t hi);

  /// Uniform double in [0, 1) with 53 random bits.
  double unit();

  double range_f(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Index drawn proportionally to the given nonnegative weights.
  size_t weighted(const std::vector<double>& cumulative);

  /// Standard normal deviate (Box-Muller, one spare cached).
  double gauss();

  /// Fisher-Yates in-place shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
  }

  /// Underlying engine, exposed for state (de)serialization.
  std::mt19937_64& engine() { return g_; }

 private:
  std::mt19937_64 g_;
  double spare_ = 0;
  bool has_spare_ = false;
};

/// Cumulative sums for Rng::weighted.
std::vector<double> cumulative_weights(const std::vector<double>& w);

/// Stable 64-bit hash for deriving per-column seeds from names.
uint64_t fnv1a64(std::string_view s);

}  // namespace patcard
