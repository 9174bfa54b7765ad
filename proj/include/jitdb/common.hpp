#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace jitdb {

using RowId = std::uint32_t;

/// Column values are either 64-bit integers or byte strings.
using Value = std::variant<std::int64_t, std::string>;

enum class ColumnType { integer, text };

/// Fixed modeled widths used for page math. Text columns are modeled at a
/// flat 32 bytes regardless of the stored string length.
inline constexpr std::uint64_t kIntWidth = 8;
inline constexpr std::uint64_t kTextWidth = 32;
/// Modeled width of a row reference appended to every index entry.
inline constexpr std::uint64_t kRowRefWidth = 8;

inline std::uint64_t type_width(ColumnType t) {
  return t == ColumnType::integer ? kIntWidth : kTextWidth;
}

inline const char* type_name(ColumnType t) {
  return t == ColumnType::integer ? "int" : "text";
}

/// Comparison operators accepted in predicates.
enum class CmpOp { eq, lt, le, gt, ge };

inline const char* cmp_op_symbol(CmpOp op) {
  switch (op) {
    case CmpOp::eq: return "=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
  }
  return "?";
}

enum class errc {
  // catalog
  duplicate_table,
  invalid_schema,
  unknown_table,
  unknown_column,
  missing_file,
  header_mismatch,
  value_type_mismatch,
  tables_exist,
  io_error,
  // sql
  syntax_error,
  unsupported_construct,
  // index
  unknown_index,
  duplicate_index,
  hypothetical_probe,
  non_prefix_predicates,
  // planner / executor
  hypothetical_in_plan,
  unknown_object,
  // harness
  dataset_missing,
  invalid_config,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::duplicate_table: return "duplicate-table";
    case errc::invalid_schema: return "invalid-schema";
    case errc::unknown_table: return "unknown-table";
    case errc::unknown_column: return "unknown-column";
    case errc::missing_file: return "missing-file";
    case errc::header_mismatch: return "header-mismatch";
    case errc::value_type_mismatch: return "value-type-mismatch";
    case errc::tables_exist: return "tables-exist";
    case errc::io_error: return "io-error";
    case errc::syntax_error: return "syntax-error";
    case errc::unsupported_construct: return "unsupported-construct";
    case errc::unknown_index: return "unknown-index";
    case errc::duplicate_index: return "duplicate-index";
    case errc::hypothetical_probe: return "hypothetical-probe";
    case errc::non_prefix_predicates: return "non-prefix-predicates";
    case errc::hypothetical_in_plan: return "hypothetical-in-plan";
    case errc::unknown_object: return "unknown-object";
    case errc::dataset_missing: return "dataset-missing";
    case errc::invalid_config: return "invalid-config";
  }
  return "error";
}

/// Single exception type for the whole engine. `offset()` is meaningful for
/// syntax errors only and holds the byte position of the offending token.
class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message, std::size_t offset = 0)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code),
        offset_(offset) {}

  errc code() const noexcept { return code_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  errc code_;
  std::size_t offset_;
};

[[noreturn]] inline void fail(errc code, const std::string& message,
                              std::size_t offset = 0) {
  throw Error(code, message, offset);
}

inline bool is_int(const Value& v) { return v.index() == 0; }
inline std::int64_t as_int(const Value& v) { return std::get<std::int64_t>(v); }
inline const std::string& as_text(const Value& v) {
  return std::get<std::string>(v);
}

/// Total order over values: integers numerically, text in byte order.
/// Mixed types order by type tag so the comparison is still total.
inline int compare_values(const Value& a, const Value& b) {
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  if (is_int(a)) {
    std::int64_t x = as_int(a), y = as_int(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  return as_text(a).compare(as_text(b));
}

inline bool value_less(const Value& a, const Value& b) {
  return compare_values(a, b) < 0;
}

inline std::string value_to_string(const Value& v) {
  return is_int(v) ? std::to_string(as_int(v)) : as_text(v);
}

inline std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

/// FNV-1a 64-bit hash; used to tag query text in the event log.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic 64-bit generator (splitmix64). Used instead of <random>
/// distributions so generated datasets are identical across platforms.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform value in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

  /// Uniform value in [lo, hi] inclusive.
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }
};

}  // namespace jitdb
