#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"
#include "jitdb/config.hpp"

namespace jitdb {

enum class IndexMode { real, hypothetical };
enum class IndexKind { conventional, jit };

inline const char* index_mode_name(IndexMode m) {
  return m == IndexMode::real ? "real" : "hypothetical";
}
inline const char* index_kind_name(IndexKind k) {
  return k == IndexKind::conventional ? "conventional" : "jit";
}

/// Modeled shape of an index. For hypothetical indexes `key_ndv` comes from
/// a statistics pass (or a pure estimate, see estimate_index_stats); for
/// real indexes it is the exact distinct key count. `leaf_pages`, `height`
/// and `size_bytes` use the same formulas in both modes, so an estimate and
/// the real build always agree on them.
struct IndexStats {
  std::uint64_t key_ndv = 0;
  std::uint64_t leaf_pages = 1;
  std::uint32_t height = 1;
  std::uint64_t size_bytes = 0;

  bool operator==(const IndexStats&) const = default;
};

struct IndexDescriptor {
  std::string id;
  std::string table;
  std::vector<std::string> columns;  // ordered, uppercase
  IndexMode mode = IndexMode::real;
  IndexKind kind = IndexKind::jit;
  IndexStats stats;
  std::uint64_t created_at = 0;
  std::uint64_t last_used = 0;
};

/// Pages needed for `bytes` of payload; at least one.
inline std::uint64_t page_count(std::uint64_t bytes, std::uint64_t page_size) {
  std::uint64_t pages = (bytes + page_size - 1) / page_size;
  return pages < 1 ? 1 : pages;
}

/// Height of a tree with `leaf_pages` leaves and the given fan-out: one leaf
/// level plus however many internal levels are needed to reduce the leaf
/// count to a single root. Computed with integer arithmetic so exact powers
/// of the fan-out do not wobble on floating-point rounding.
inline std::uint32_t btree_height(std::uint64_t leaf_pages,
                                  std::uint64_t fan_out) {
  std::uint32_t levels = 0;
  std::uint64_t pages = leaf_pages;
  while (pages > 1) {
    pages = (pages + fan_out - 1) / fan_out;
    ++levels;
  }
  return levels + 1 < 1 ? 1 : levels + 1;
}

/// One probe condition against an index column. The executor derives these
/// from planner-matched predicates; direct callers may build them by hand.
struct ProbeCondition {
  std::string column;  // uppercase
  CmpOp op = CmpOp::eq;
  Value value;
};

namespace detail {

struct IndexEntry {
  std::vector<Value> key;
  RowId row = 0;
};

inline bool entry_less(const IndexEntry& a, const IndexEntry& b) {
  const std::size_t n = std::min(a.key.size(), b.key.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = compare_values(a.key[i], b.key[i]);
    if (c) return c < 0;
  }
  if (a.key.size() != b.key.size()) return a.key.size() < b.key.size();
  return a.row < b.row;
}

struct KeyHash {
  std::size_t operator()(const std::vector<Value>& key) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& v : key) {
      h ^= v.index();
      h *= 0x100000001b3ULL;
      if (is_int(v)) {
        std::uint64_t x = static_cast<std::uint64_t>(as_int(v));
        for (int i = 0; i < 8; ++i) {
          h ^= (x >> (i * 8)) & 0xff;
          h *= 0x100000001b3ULL;
        }
      } else {
        for (unsigned char c : as_text(v)) {
          h ^= c;
          h *= 0x100000001b3ULL;
        }
      }
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace detail

/// Ordered index over a composite key: entries sorted lexicographically
/// (integers numerically, text in byte order), ties broken by row id so
/// iteration order is fully deterministic.
class OrderedIndex {
 public:
  void build(const Table& table, const std::vector<std::size_t>& columns) {
    entries_.clear();
    entries_.reserve(table.row_count());
    for (RowId r = 0; r < table.row_count(); ++r) {
      detail::IndexEntry e;
      e.key.reserve(columns.size());
      for (std::size_t c : columns) e.key.push_back(table.value(r, c));
      e.row = r;
      entries_.push_back(std::move(e));
    }
    std::sort(entries_.begin(), entries_.end(), detail::entry_less);
  }

  std::uint64_t exact_key_ndv() const {
    std::uint64_t ndv = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (i == 0 || entries_[i].key != entries_[i - 1].key) ++ndv;
    return ndv;
  }

  std::size_t entry_count() const { return entries_.size(); }

  const std::vector<Value>& key_at(std::size_t i) const {
    return entries_[i].key;
  }

  /// Rows whose key starts with `eq_prefix`, optionally narrowed by one
  /// range bound on the following key part. Results come back in key order.
  std::vector<RowId> lookup(std::span<const Value> eq_prefix,
                            const std::optional<CmpOp>& range_op,
                            const Value& range_value) const {
    auto lo = entries_.begin();
    auto hi = entries_.end();
    const std::size_t k = eq_prefix.size();

    // Narrow to the rows matching the equality prefix.
    lo = std::lower_bound(lo, hi, eq_prefix,
                          [k](const detail::IndexEntry& e, std::span<const Value> p) {
                            return prefix_compare(e.key, p, k) < 0;
                          });
    hi = std::upper_bound(lo, hi, eq_prefix,
                          [k](std::span<const Value> p, const detail::IndexEntry& e) {
                            return prefix_compare(e.key, p, k) > 0;
                          });

    // Narrow by the range bound on key part k, if any.
    if (range_op) {
      switch (*range_op) {
        case CmpOp::lt:
          hi = std::lower_bound(lo, hi, range_value,
                                [k](const detail::IndexEntry& e, const Value& v) {
                                  return compare_values(e.key[k], v) < 0;
                                });
          break;
        case CmpOp::le:
          hi = std::upper_bound(lo, hi, range_value,
                                [k](const Value& v, const detail::IndexEntry& e) {
                                  return compare_values(e.key[k], v) > 0;
                                });
          break;
        case CmpOp::gt:
          lo = std::upper_bound(lo, hi, range_value,
                                [k](const Value& v, const detail::IndexEntry& e) {
                                  return compare_values(e.key[k], v) > 0;
                                });
          break;
        case CmpOp::ge:
          lo = std::lower_bound(lo, hi, range_value,
                                [k](const detail::IndexEntry& e, const Value& v) {
                                  return compare_values(e.key[k], v) < 0;
                                });
          break;
        case CmpOp::eq:
          break;  // handled as part of the prefix
      }
    }

    std::vector<RowId> out;
    out.reserve(static_cast<std::size_t>(hi - lo));
    for (auto it = lo; it != hi; ++it) out.push_back(it->row);
    return out;
  }

 private:
  static int prefix_compare(const std::vector<Value>& key,
                            std::span<const Value> prefix, std::size_t k) {
    for (std::size_t i = 0; i < k; ++i) {
      int c = compare_values(key[i], prefix[i]);
      if (c) return c;
    }
    return 0;
  }

  std::vector<detail::IndexEntry> entries_;
};

/// Pure-arithmetic index shape estimate from catalog statistics: no data
/// pass. key_ndv is min(rows, product of column ndv), capped at rows.
inline IndexStats estimate_index_stats(const Table& table,
                                       const std::vector<std::size_t>& columns,
                                       const Config& cfg) {
  IndexStats s;
  const std::uint64_t rows = table.row_count();
  std::uint64_t entry_width = kRowRefWidth;
  for (std::size_t c : columns)
    entry_width += type_width(table.schema().columns[c].type);
  s.size_bytes = rows * entry_width;
  s.leaf_pages = page_count(s.size_bytes, cfg.page_size);
  s.height = btree_height(s.leaf_pages, cfg.fan_out);
  std::uint64_t prod = 1;
  for (std::size_t c : columns) {
    std::uint64_t ndv = table.stats(c).ndv;
    if (ndv == 0 || prod > rows / (ndv ? ndv : 1)) {
      prod = ndv == 0 ? 0 : rows;
      if (ndv == 0) break;
    } else {
      prod *= ndv;
    }
  }
  s.key_ndv = std::min(rows, prod);
  return s;
}

/// Owns every index descriptor plus the key structures of real indexes.
/// Hypothetical indexes carry statistics only: they can be costed by the
/// planner but never probed or executed.
class IndexManager {
 public:
  /// Builds an index over `columns` of `table_name`. Real mode extracts and
  /// sorts the keys; hypothetical mode runs a single statistics pass (exact
  /// distinct key count) and keeps no key structure.
  const IndexDescriptor& build_index(const Catalog& catalog,
                                     std::string_view table_name,
                                     const std::vector<std::string>& columns,
                                     IndexMode mode, IndexKind kind,
                                     const Config& cfg, std::uint64_t now) {
    const Table& table = catalog.table(table_name);
    if (columns.empty())
      fail(errc::invalid_schema, "index needs at least one column");
    std::vector<std::size_t> col_idx;
    std::vector<std::string> upper;
    std::unordered_set<std::string> seen;
    for (const auto& c : columns) {
      auto idx = table.schema().column_index(c);
      if (!idx)
        fail(errc::unknown_column,
             table.name() + " has no column " + to_upper(c));
      if (!seen.insert(to_upper(c)).second)
        fail(errc::invalid_schema, "index repeats column " + to_upper(c));
      col_idx.push_back(*idx);
      upper.push_back(to_upper(c));
    }
    if (mode == IndexMode::real && find_real(table.name(), upper))
      fail(errc::duplicate_index,
           "a real index on these columns of " + table.name() + " exists");

    Slot slot;
    slot.desc.table = table.name();
    slot.desc.columns = upper;
    slot.desc.mode = mode;
    slot.desc.kind = kind;
    slot.desc.created_at = now;
    slot.desc.last_used = now;
    slot.desc.stats = estimate_index_stats(table, col_idx, cfg);
    slot.columns = col_idx;

    if (mode == IndexMode::real) {
      slot.structure = std::make_unique<OrderedIndex>();
      slot.structure->build(table, col_idx);
      slot.desc.stats.key_ndv = slot.structure->exact_key_ndv();
      slot.desc.id = fresh_id("IDX_" + table.name(), upper);
    } else {
      slot.desc.stats.key_ndv = distinct_key_count(table, col_idx);
      slot.desc.id = "HYP_" + std::to_string(++hypo_counter_);
    }

    auto [it, ok] = slots_.emplace(slot.desc.id, std::move(slot));
    return it->second.desc;
  }

  void drop_index(std::string_view id) {
    if (slots_.erase(std::string(id)) == 0)
      fail(errc::unknown_index, "no index named " + std::string(id));
  }

  bool has_index(std::string_view id) const {
    return slots_.count(std::string(id)) != 0;
  }

  const IndexDescriptor& descriptor(std::string_view id) const {
    auto it = slots_.find(std::string(id));
    if (it == slots_.end())
      fail(errc::unknown_index, "no index named " + std::string(id));
    return it->second.desc;
  }

  /// Matching row ids, in key order. The conditions must form an equality
  /// prefix of the index columns, optionally followed by one range condition
  /// on the next column; anything else is a non-prefix error. A successful
  /// probe refreshes the descriptor's last_used stamp.
  std::vector<RowId> probe(std::string_view id,
                           std::span<const ProbeCondition> conditions,
                           std::uint64_t now) {
    auto it = slots_.find(std::string(id));
    if (it == slots_.end())
      fail(errc::unknown_index, "no index named " + std::string(id));
    Slot& slot = it->second;
    if (slot.desc.mode == IndexMode::hypothetical)
      fail(errc::hypothetical_probe,
           slot.desc.id + " is hypothetical and cannot be probed");

    // Sort the conditions onto the index columns.
    std::vector<std::vector<const ProbeCondition*>> per_col(
        slot.desc.columns.size());
    for (const auto& cond : conditions) {
      std::string u = to_upper(cond.column);
      bool placed = false;
      for (std::size_t i = 0; i < slot.desc.columns.size(); ++i) {
        if (slot.desc.columns[i] == u) {
          per_col[i].push_back(&cond);
          placed = true;
          break;
        }
      }
      if (!placed)
        fail(errc::non_prefix_predicates,
             u + " is not a column of " + slot.desc.id);
    }

    std::vector<Value> eq_prefix;
    std::optional<CmpOp> range_op;
    Value range_value;
    std::size_t consumed = 0;
    bool contradiction = false;
    for (std::size_t i = 0; i < per_col.size(); ++i) {
      if (per_col[i].empty()) break;
      bool all_eq = std::all_of(per_col[i].begin(), per_col[i].end(),
                                [](const ProbeCondition* c) {
                                  return c->op == CmpOp::eq;
                                });
      if (all_eq) {
        eq_prefix.push_back(per_col[i][0]->value);
        for (const auto* c : per_col[i])
          if (compare_values(c->value, per_col[i][0]->value) != 0)
            contradiction = true;
        consumed += per_col[i].size();
      } else if (per_col[i].size() == 1 && per_col[i][0]->op != CmpOp::eq) {
        range_op = per_col[i][0]->op;
        range_value = per_col[i][0]->value;
        ++consumed;
        break;
      } else {
        fail(errc::non_prefix_predicates,
             "conditions on " + slot.desc.columns[i] +
                 " do not form an equality or a single range");
      }
    }
    if (consumed != conditions.size())
      fail(errc::non_prefix_predicates,
           "conditions do not form a usable prefix of " + slot.desc.id);

    slot.desc.last_used = now;
    if (contradiction) return {};
    return slot.structure->lookup(eq_prefix, range_op, range_value);
  }

  void touch(std::string_view id, std::uint64_t now) {
    auto it = slots_.find(std::string(id));
    if (it == slots_.end())
      fail(errc::unknown_index, "no index named " + std::string(id));
    it->second.desc.last_used = now;
  }

  /// Every descriptor, ordered by id.
  std::vector<const IndexDescriptor*> list() const {
    std::vector<const IndexDescriptor*> out;
    out.reserve(slots_.size());
    for (const auto& [id, slot] : slots_) out.push_back(&slot.desc);
    return out;
  }

  std::vector<const IndexDescriptor*> real_indexes() const {
    return filtered([](const IndexDescriptor& d) {
      return d.mode == IndexMode::real;
    });
  }

  std::vector<const IndexDescriptor*> conventional_indexes() const {
    return filtered([](const IndexDescriptor& d) {
      return d.mode == IndexMode::real && d.kind == IndexKind::conventional;
    });
  }

  std::vector<const IndexDescriptor*> live_jit_indexes() const {
    return filtered([](const IndexDescriptor& d) {
      return d.mode == IndexMode::real && d.kind == IndexKind::jit;
    });
  }

  std::size_t hypothetical_count() const {
    std::size_t n = 0;
    for (const auto& [id, slot] : slots_)
      if (slot.desc.mode == IndexMode::hypothetical) ++n;
    return n;
  }

  const IndexDescriptor* find_real(std::string_view table_name,
                                   const std::vector<std::string>& columns) const {
    for (const auto& [id, slot] : slots_) {
      if (slot.desc.mode != IndexMode::real) continue;
      if (slot.desc.table == to_upper(table_name) &&
          slot.desc.columns == columns)
        return &slot.desc;
    }
    return nullptr;
  }

 private:
  struct Slot {
    IndexDescriptor desc;
    std::vector<std::size_t> columns;
    std::unique_ptr<OrderedIndex> structure;  // real mode only
  };

  template <typename Pred>
  std::vector<const IndexDescriptor*> filtered(Pred pred) const {
    std::vector<const IndexDescriptor*> out;
    for (const auto& [id, slot] : slots_)
      if (pred(slot.desc)) out.push_back(&slot.desc);
    return out;
  }

  static std::uint64_t distinct_key_count(const Table& table,
                                          const std::vector<std::size_t>& cols) {
    std::unordered_set<std::vector<Value>, detail::KeyHash> keys;
    keys.reserve(table.row_count() / 4 + 8);
    std::vector<Value> key(cols.size());
    for (RowId r = 0; r < table.row_count(); ++r) {
      for (std::size_t i = 0; i < cols.size(); ++i)
        key[i] = table.value(r, cols[i]);
      keys.insert(key);
    }
    return keys.size();
  }

  std::string fresh_id(std::string base, const std::vector<std::string>& cols) {
    for (const auto& c : cols) base += "_" + c;
    if (!slots_.count(base)) return base;
    for (std::uint64_t n = 2;; ++n) {
      std::string candidate = base + "_" + std::to_string(n);
      if (!slots_.count(candidate)) return candidate;
    }
  }

  std::map<std::string, Slot> slots_;
  std::uint64_t hypo_counter_ = 0;
};

}  // namespace jitdb
