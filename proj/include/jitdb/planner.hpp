#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"
#include "jitdb/config.hpp"
#include "jitdb/index.hpp"
#include "jitdb/sql.hpp"

namespace jitdb {

/// Estimated resource consumption of a plan. The single unit is estimated
/// page accesses; time-based factors are out of scope.
struct CostEstimate {
  double pages = 0.0;
};

/// A predicate bound to a concrete table and column after name resolution.
struct BoundPred {
  bool on_base = true;      // which side lhs resolved to
  std::size_t col = 0;      // column index within that table
  CmpOp op = CmpOp::eq;
  bool rhs_is_column = false;
  Value rhs_value;
  bool rhs_on_base = true;  // side of rhs when rhs_is_column
  std::size_t rhs_col = 0;
  const Predicate* source = nullptr;

  /// Column-vs-literal comparisons are the ones an ordered index can serve.
  bool sargable() const { return !rhs_is_column; }
};

/// The query after resolving every reference against the catalog. `base`
/// is always set; `inner` only for joins. Predicates are split by the side
/// they constrain; cross predicates compare columns of different tables and
/// can only be evaluated on joined rows.
struct ResolvedQuery {
  const QueryAst* ast = nullptr;
  const Table* base = nullptr;
  const Table* inner = nullptr;
  std::size_t join_base_col = 0;
  std::size_t join_inner_col = 0;
  std::vector<BoundPred> base_preds;
  std::vector<BoundPred> inner_preds;
  std::vector<BoundPred> cross_preds;
};

namespace detail {

struct ResolvedRef {
  bool on_base = true;
  std::size_t col = 0;
};

inline ResolvedRef resolve_ref(const ColumnRef& ref, const Table& base,
                               const Table* inner) {
  if (!ref.table.empty()) {
    if (ref.table == base.name()) {
      auto idx = base.schema().column_index(ref.column);
      if (!idx)
        fail(errc::unknown_column,
             base.name() + " has no column " + ref.column);
      return {true, *idx};
    }
    if (inner && ref.table == inner->name()) {
      auto idx = inner->schema().column_index(ref.column);
      if (!idx)
        fail(errc::unknown_column,
             inner->name() + " has no column " + ref.column);
      return {false, *idx};
    }
    fail(errc::unknown_table, ref.table + " is not a table of this query");
  }
  if (auto idx = base.schema().column_index(ref.column)) return {true, *idx};
  if (inner)
    if (auto idx = inner->schema().column_index(ref.column))
      return {false, *idx};
  fail(errc::unknown_column, "no column named " + ref.column);
}

}  // namespace detail

/// Resolves every table and column reference of `ast`. Literal types are
/// checked against column types here so later stages can assume well-typed
/// predicates.
inline ResolvedQuery resolve(const Catalog& catalog, const QueryAst& ast) {
  ResolvedQuery rq;
  rq.ast = &ast;
  rq.base = &catalog.table(ast.base_table);
  if (ast.join) {
    rq.inner = &catalog.table(ast.join->right_table);
    auto l = detail::resolve_ref(ast.join->left_column, *rq.base, rq.inner);
    auto r = detail::resolve_ref(ast.join->right_column, *rq.base, rq.inner);
    if (l.on_base == r.on_base)
      fail(errc::unsupported_construct,
           "join condition must relate the two joined tables");
    rq.join_base_col = l.on_base ? l.col : r.col;
    rq.join_inner_col = l.on_base ? r.col : l.col;
  }

  for (const Predicate& p : ast.where) {
    BoundPred bp;
    bp.source = &p;
    auto lhs = detail::resolve_ref(p.lhs, *rq.base, rq.inner);
    bp.on_base = lhs.on_base;
    bp.col = lhs.col;
    bp.op = p.op;
    if (p.rhs_is_column) {
      bp.rhs_is_column = true;
      auto rhs = detail::resolve_ref(p.rhs_column, *rq.base, rq.inner);
      bp.rhs_on_base = rhs.on_base;
      bp.rhs_col = rhs.col;
      if (bp.on_base != bp.rhs_on_base) {
        rq.cross_preds.push_back(bp);
        continue;
      }
    } else {
      const Table& t = lhs.on_base ? *rq.base : *rq.inner;
      ColumnType ct = t.schema().columns[lhs.col].type;
      bool literal_is_int = is_int(p.rhs_value);
      if ((ct == ColumnType::integer) != literal_is_int)
        fail(errc::value_type_mismatch,
             "literal type does not match column " +
                 t.schema().columns[lhs.col].name);
      bp.rhs_value = p.rhs_value;
    }
    (bp.on_base ? rq.base_preds : rq.inner_preds).push_back(bp);
  }
  return rq;
}

/// Bumps usage counts for every distinct column the query references in its
/// WHERE clause or join condition. Both sides of a column-to-column
/// comparison count.
inline void record_column_usage(Catalog& catalog, const QueryAst& ast) {
  ResolvedQuery rq = resolve(catalog, ast);
  std::set<std::pair<std::string, std::size_t>> refs;
  auto add = [&](bool on_base, std::size_t col) {
    const Table& t = on_base ? *rq.base : *rq.inner;
    refs.emplace(t.name(), col);
  };
  for (const auto& preds : {rq.base_preds, rq.inner_preds}) {
    for (const auto& p : preds) {
      add(p.on_base, p.col);
      if (p.rhs_is_column) add(p.rhs_on_base, p.rhs_col);
    }
  }
  for (const auto& p : rq.cross_preds) {
    add(p.on_base, p.col);
    add(p.rhs_on_base, p.rhs_col);
  }
  if (rq.inner) {
    add(true, rq.join_base_col);
    add(false, rq.join_inner_col);
  }
  for (const auto& [table, col] : refs)
    catalog.bump_usage(table, catalog.table(table).schema().columns[col].name);
}

// ---------------------------------------------------------------------------
// Selectivity
// ---------------------------------------------------------------------------

namespace detail {

inline double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

inline double range_fraction(CmpOp op, std::int64_t v, std::int64_t lo,
                             std::int64_t hi) {
  const double span = static_cast<double>(hi) - static_cast<double>(lo);
  switch (op) {
    case CmpOp::lt:
    case CmpOp::le:
      return clamp01((static_cast<double>(v) - static_cast<double>(lo)) / span);
    case CmpOp::gt:
    case CmpOp::ge:
      return clamp01((static_cast<double>(hi) - static_cast<double>(v)) / span);
    case CmpOp::eq:
      break;
  }
  return 1.0;
}

}  // namespace detail

/// Fraction of a table's rows a single predicate keeps.
///
///   equality to a literal      1 / max(ndv, 1), or 0 when the literal falls
///                              outside the column's min/max
///   range against a literal    covered span / (max - min), clamped to [0,1];
///                              1.0 when min/max are unavailable or equal
///   column = column            1 / max(ndv_lhs, ndv_rhs, 1)
///   column <op> column         1.0 (no estimate)
inline double predicate_selectivity(const BoundPred& p, const Table& lhs_table,
                                    const Table* rhs_table) {
  const ColumnStats& s = lhs_table.stats(p.col);
  if (p.rhs_is_column) {
    if (p.op != CmpOp::eq) return 1.0;
    const Table& rt = rhs_table ? *rhs_table : lhs_table;
    std::uint64_t n = std::max<std::uint64_t>(
        {s.ndv, rt.stats(p.rhs_col).ndv, 1});
    return 1.0 / static_cast<double>(n);
  }
  if (p.op == CmpOp::eq) {
    if (is_int(p.rhs_value) && s.min_val && s.max_val) {
      std::int64_t v = as_int(p.rhs_value);
      if (v < *s.min_val || v > *s.max_val) return 0.0;
    }
    return 1.0 / static_cast<double>(std::max<std::uint64_t>(s.ndv, 1));
  }
  // Range predicate.
  if (!is_int(p.rhs_value) || !s.min_val || !s.max_val ||
      *s.max_val <= *s.min_val)
    return 1.0;  // degenerate statistics fall back to "keeps everything"
  return detail::range_fraction(p.op, as_int(p.rhs_value), *s.min_val,
                                *s.max_val);
}

/// Selectivity of the equality join condition itself.
inline double join_selectivity(const ResolvedQuery& rq) {
  std::uint64_t n = std::max<std::uint64_t>(
      {rq.base->stats(rq.join_base_col).ndv,
       rq.inner->stats(rq.join_inner_col).ndv, 1});
  return 1.0 / static_cast<double>(n);
}

/// Conjunctions combine multiplicatively (independence assumption).
inline double combined_selectivity(std::span<const BoundPred> preds,
                                   const Table& table) {
  double sel = 1.0;
  for (const auto& p : preds) sel *= predicate_selectivity(p, table, &table);
  return sel;
}

// ---------------------------------------------------------------------------
// Cost formulas
// ---------------------------------------------------------------------------

/// Full scan: every page of the table, at least one.
inline CostEstimate cost_table_scan(const Table& table, const Config& cfg) {
  return {static_cast<double>(
      page_count(table.row_count() * table.row_width_bytes(), cfg.page_size))};
}

/// Index scan with combined matched selectivity `sel` into `table`:
/// descend the tree, read the selected fraction of the leaf level, then
/// fetch the selected fraction of the table's pages scaled by fetch_factor.
inline CostEstimate cost_index_scan(const IndexStats& stats, double sel,
                                    const Table& table, const Config& cfg) {
  const double table_pages = static_cast<double>(
      page_count(table.row_count() * table.row_width_bytes(), cfg.page_size));
  return {static_cast<double>(stats.height) +
          sel * static_cast<double>(stats.leaf_pages) +
          sel * table_pages * cfg.fetch_factor};
}

// ---------------------------------------------------------------------------
// Prefix matching
// ---------------------------------------------------------------------------

/// Outcome of matching a table's sargable predicates against an index's
/// column order: equality conditions on a leading prefix of the columns,
/// optionally one range condition on the next column.
struct PrefixMatch {
  std::vector<std::size_t> matched;  // positions into the predicate span
  double selectivity = 1.0;
  std::size_t columns_consumed = 0;
};

/// Matches `preds` (predicates of one table) against an index column list
/// given as column indexes of that table. `lead_selectivity`, when set,
/// models a parameter equality on the first index column (the nested-loop
/// probe key) that is not part of `preds`. Returns nothing when the index
/// matches no predicate at all.
inline std::optional<PrefixMatch> match_prefix(
    const std::vector<std::size_t>& index_cols,
    std::span<const BoundPred> preds, const Table& table,
    std::optional<double> lead_selectivity = std::nullopt) {
  PrefixMatch m;
  std::size_t start = 0;
  if (lead_selectivity) {
    m.selectivity *= *lead_selectivity;
    m.columns_consumed = 1;
    start = 1;
  }
  for (std::size_t i = start; i < index_cols.size(); ++i) {
    std::vector<std::size_t> eq_here;
    std::optional<std::size_t> range_here;
    for (std::size_t p = 0; p < preds.size(); ++p) {
      if (!preds[p].sargable()) continue;
      if (preds[p].col != index_cols[i]) continue;
      if (preds[p].op == CmpOp::eq) {
        eq_here.push_back(p);
      } else if (!range_here) {
        range_here = p;
      }
    }
    if (!eq_here.empty()) {
      for (std::size_t p : eq_here) {
        m.matched.push_back(p);
        m.selectivity *= predicate_selectivity(preds[p], table, &table);
      }
      ++m.columns_consumed;
      continue;
    }
    if (range_here) {
      m.matched.push_back(*range_here);
      m.selectivity *= predicate_selectivity(preds[*range_here], table, &table);
      ++m.columns_consumed;
    }
    break;  // the prefix ends at the first column without an equality
  }
  if (m.matched.empty() && !lead_selectivity) return std::nullopt;
  return m;
}

inline bool bound_pred_sargable(const BoundPred& p) { return !p.rhs_is_column; }

// ---------------------------------------------------------------------------
// Plan enumeration
// ---------------------------------------------------------------------------

/// One enumerated access path for a single table.
struct AccessAlt {
  bool is_index = false;
  const IndexDescriptor* index = nullptr;
  PrefixMatch match;     // when is_index
  double cost = 0.0;     // full scan cost, or per-probe cost for inner sides
  std::size_t index_columns = 0;
};

/// One complete enumerated plan with its modeled cost.
struct PlanAlt {
  enum class Kind { table_scan, index_scan, nested_loop_join };
  Kind kind = Kind::table_scan;
  std::string object;    // base table name
  std::string index_id;  // "-" when no index participates
  double cost = 0.0;
  double out_rows = 0.0;
  AccessAlt base_access;
  std::optional<AccessAlt> inner_access;
  std::size_t index_columns = 0;

  const char* kind_name() const {
    switch (kind) {
      case Kind::table_scan: return "TABLE_SCAN";
      case Kind::index_scan: return "INDEX_SCAN";
      case Kind::nested_loop_join: return "NLJ";
    }
    return "?";
  }
};

namespace detail {

inline std::vector<std::size_t> descriptor_columns(const IndexDescriptor& d,
                                                   const Table& t) {
  std::vector<std::size_t> out;
  out.reserve(d.columns.size());
  for (const auto& c : d.columns) out.push_back(*t.schema().column_index(c));
  return out;
}

inline double all_preds_selectivity(const ResolvedQuery& rq) {
  double sel = combined_selectivity(rq.base_preds, *rq.base);
  if (rq.inner) sel *= combined_selectivity(rq.inner_preds, *rq.inner);
  for (const auto& p : rq.cross_preds) {
    const Table& lt = p.on_base ? *rq.base : *rq.inner;
    const Table& rt = p.rhs_on_base ? *rq.base : *rq.inner;
    sel *= predicate_selectivity(p, lt, &rt);
  }
  return sel;
}

}  // namespace detail

/// Enumerates every plan the engine knows how to execute for `rq` given the
/// available indexes: a full scan of the base table, an index scan per
/// usable base-table index, and for joins every combination with an inner
/// full scan or an inner index probe on the join column. Results are sorted
/// cheapest first; ties prefer fewer index columns, then lower index id.
inline std::vector<PlanAlt> enumerate_plans(
    const ResolvedQuery& rq, std::span<const IndexDescriptor* const> indexes,
    const Config& cfg) {
  const Table& base = *rq.base;

  std::vector<AccessAlt> base_alts;
  {
    AccessAlt scan;
    scan.cost = cost_table_scan(base, cfg).pages;
    base_alts.push_back(scan);
    for (const auto* d : indexes) {
      if (d->table != base.name()) continue;
      auto cols = detail::descriptor_columns(*d, base);
      auto m = match_prefix(cols, rq.base_preds, base);
      if (!m) continue;
      AccessAlt alt;
      alt.is_index = true;
      alt.index = d;
      alt.match = *m;
      alt.cost = cost_index_scan(d->stats, m->selectivity, base, cfg).pages;
      alt.index_columns = d->columns.size();
      base_alts.push_back(alt);
    }
  }

  const double base_sel = combined_selectivity(rq.base_preds, base);
  const double base_out = static_cast<double>(base.row_count()) * base_sel;

  std::vector<PlanAlt> alts;
  if (!rq.inner) {
    const double out_rows =
        static_cast<double>(base.row_count()) * detail::all_preds_selectivity(rq);
    for (const auto& b : base_alts) {
      PlanAlt a;
      a.kind = b.is_index ? PlanAlt::Kind::index_scan : PlanAlt::Kind::table_scan;
      a.object = base.name();
      a.index_id = b.is_index ? b.index->id : "-";
      a.cost = b.cost;
      a.out_rows = out_rows;
      a.base_access = b;
      a.index_columns = b.index_columns;
      alts.push_back(std::move(a));
    }
  } else {
    const Table& inner = *rq.inner;
    std::vector<AccessAlt> inner_alts;
    {
      AccessAlt scan;  // full inner scan per outer row
      scan.cost = cost_table_scan(inner, cfg).pages;
      inner_alts.push_back(scan);
      const double probe_sel =
          1.0 / static_cast<double>(
                    std::max<std::uint64_t>(inner.stats(rq.join_inner_col).ndv, 1));
      for (const auto* d : indexes) {
        if (d->table != inner.name()) continue;
        auto cols = detail::descriptor_columns(*d, inner);
        if (cols.empty() || cols[0] != rq.join_inner_col) continue;
        auto m = match_prefix(cols, rq.inner_preds, inner, probe_sel);
        AccessAlt alt;
        alt.is_index = true;
        alt.index = d;
        alt.match = *m;
        alt.cost = cost_index_scan(d->stats, m->selectivity, inner, cfg).pages;
        alt.index_columns = d->columns.size();
        inner_alts.push_back(alt);
      }
    }

    const double out_rows = base_out * static_cast<double>(inner.row_count()) *
                            join_selectivity(rq) *
                            combined_selectivity(rq.inner_preds, inner) *
                            [&] {
                              double s = 1.0;
                              for (const auto& p : rq.cross_preds) {
                                const Table& lt = p.on_base ? base : inner;
                                const Table& rt = p.rhs_on_base ? base : inner;
                                s *= predicate_selectivity(p, lt, &rt);
                              }
                              return s;
                            }();

    for (const auto& b : base_alts) {
      for (const auto& i : inner_alts) {
        PlanAlt a;
        a.kind = PlanAlt::Kind::nested_loop_join;
        a.object = base.name();
        a.index_id = i.is_index ? i.index->id
                                : (b.is_index ? b.index->id : "-");
        a.cost = b.cost + base_out * i.cost;
        a.out_rows = out_rows;
        a.base_access = b;
        a.inner_access = i;
        a.index_columns = b.index_columns + i.index_columns;
        alts.push_back(std::move(a));
      }
    }
  }

  std::sort(alts.begin(), alts.end(), [](const PlanAlt& a, const PlanAlt& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.index_columns != b.index_columns)
      return a.index_columns < b.index_columns;
    return a.index_id < b.index_id;
  });
  return alts;
}

// ---------------------------------------------------------------------------
// Plan tree
// ---------------------------------------------------------------------------

/// Executable plan tree. Scans carry the predicates they must apply:
/// `matched` are served by the index probe, `residual` are checked on the
/// fetched rows. An index scan in an executable plan must reference a real
/// index; hypothetical descriptors are only ever seen by the costing path.
struct PlanNode {
  enum class Kind { table_scan, index_scan, nested_loop_join };
  Kind kind = Kind::table_scan;
  CostEstimate cost;
  double out_rows = 0.0;

  // scans
  std::string table;
  std::string index_id;
  std::vector<BoundPred> matched;
  std::vector<BoundPred> residual;
  bool probe_with_join_key = false;  // inner side of an index nested loop

  // joins
  std::unique_ptr<PlanNode> outer;
  std::unique_ptr<PlanNode> inner;
  std::size_t join_outer_col = 0;
  std::size_t join_inner_col = 0;
  std::vector<BoundPred> cross_residual;
};

namespace detail {

inline std::unique_ptr<PlanNode> scan_node(const AccessAlt& a,
                                           const Table& table,
                                           std::span<const BoundPred> preds,
                                           bool inner_side) {
  auto node = std::make_unique<PlanNode>();
  node->table = table.name();
  node->cost.pages = a.cost;
  if (!a.is_index) {
    node->kind = PlanNode::Kind::table_scan;
    node->residual.assign(preds.begin(), preds.end());
    return node;
  }
  node->kind = PlanNode::Kind::index_scan;
  node->index_id = a.index->id;
  node->probe_with_join_key = inner_side;
  std::vector<bool> used(preds.size(), false);
  for (std::size_t p : a.match.matched) {
    node->matched.push_back(preds[p]);
    used[p] = true;
  }
  for (std::size_t p = 0; p < preds.size(); ++p)
    if (!used[p]) node->residual.push_back(preds[p]);
  return node;
}

}  // namespace detail

/// Builds the executable tree for one enumerated alternative.
inline std::unique_ptr<PlanNode> build_plan(const PlanAlt& alt,
                                            const ResolvedQuery& rq) {
  if (!alt.inner_access) {
    auto node = detail::scan_node(alt.base_access, *rq.base, rq.base_preds, false);
    node->cost.pages = alt.cost;
    node->out_rows = alt.out_rows;
    return node;
  }
  auto join = std::make_unique<PlanNode>();
  join->kind = PlanNode::Kind::nested_loop_join;
  join->cost.pages = alt.cost;
  join->out_rows = alt.out_rows;
  join->table = rq.base->name();
  join->join_outer_col = rq.join_base_col;
  join->join_inner_col = rq.join_inner_col;
  join->cross_residual = rq.cross_preds;
  join->outer = detail::scan_node(alt.base_access, *rq.base, rq.base_preds, false);
  join->inner =
      detail::scan_node(*alt.inner_access, *rq.inner, rq.inner_preds, true);
  return join;
}

/// Plans `rq` against the given (real) indexes and returns the cheapest
/// executable tree. With no usable index this degrades to a full scan.
inline std::unique_ptr<PlanNode> plan(
    const ResolvedQuery& rq, std::span<const IndexDescriptor* const> indexes,
    const Config& cfg) {
  auto alts = enumerate_plans(rq, indexes, cfg);
  return build_plan(alts.front(), rq);
}

// ---------------------------------------------------------------------------
// EXPLAIN
// ---------------------------------------------------------------------------

struct ExplainReport {
  std::string query;              // canonical text
  PlanAlt chosen;
  std::vector<PlanAlt> alternatives;  // everything else, cheapest first
  std::string scan_object;        // "Table" or "Index": base table access
  bool executed = false;
};

/// Builds the report for `rq` without executing anything.
inline ExplainReport explain_query(const ResolvedQuery& rq,
                                   std::span<const IndexDescriptor* const> indexes,
                                   const Config& cfg, bool executed = false) {
  ExplainReport rep;
  rep.query = render(*rq.ast);
  auto alts = enumerate_plans(rq, indexes, cfg);
  rep.chosen = alts.front();
  rep.alternatives.assign(alts.begin() + 1, alts.end());
  rep.scan_object = rep.chosen.base_access.is_index ? "Index" : "Table";
  rep.executed = executed;
  return rep;
}

namespace detail {

inline std::string format_cost(double cost) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", cost);
  return buf;
}

inline std::string plan_line(const PlanAlt& a) {
  return std::string(a.kind_name()) + " object=" + a.object +
         " index=" + a.index_id + " cost=" + format_cost(a.cost) +
         " rows=" + std::to_string(static_cast<long long>(std::llround(a.out_rows)));
}

}  // namespace detail

/// Fixed text form of a report:
///
///   QUERY <canonical sql>
///   PLAN <kind> object=<name> index=<id|-> cost=<%.4f> rows=<int>
///   ALT  <same fields, one line per alternative>
///   MODE <COMPILE_ONLY|EXECUTED>
inline std::string format_explain(const ExplainReport& rep) {
  std::string out = "QUERY " + rep.query + "\n";
  out += "PLAN " + detail::plan_line(rep.chosen) + "\n";
  for (const auto& alt : rep.alternatives)
    out += "ALT  " + detail::plan_line(alt) + "\n";
  out += std::string("MODE ") + (rep.executed ? "EXECUTED" : "COMPILE_ONLY") + "\n";
  return out;
}

}  // namespace jitdb
