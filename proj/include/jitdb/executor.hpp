#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"
#include "jitdb/config.hpp"
#include "jitdb/index.hpp"
#include "jitdb/planner.hpp"
#include "jitdb/sql.hpp"

namespace jitdb {

/// A fully computed query result. Every matching row reference is
/// materialized up front; cell values are fetched from table storage on
/// access, which keeps wide joins affordable. The result stays valid until
/// the catalog is mutated.
struct ResultSet {
  std::vector<std::string> columns;
  const Table* base = nullptr;
  const Table* inner = nullptr;          // set for join results
  std::vector<RowId> base_rows;
  std::vector<RowId> inner_rows;         // parallel to base_rows for joins
  /// Page accesses actually charged while executing, using the same
  /// formulas as the cost model but with observed fetch counts.
  double actual_pages = 0.0;

  std::size_t row_count() const { return base_rows.size(); }

  Row row(std::size_t i) const {
    Row out = base->row(base_rows[i]);
    if (inner) {
      Row right = inner->row(inner_rows[i]);
      out.insert(out.end(), std::make_move_iterator(right.begin()),
                 std::make_move_iterator(right.end()));
    }
    return out;
  }

  std::vector<Row> materialize() const {
    std::vector<Row> rows;
    rows.reserve(row_count());
    for (std::size_t i = 0; i < row_count(); ++i) rows.push_back(row(i));
    return rows;
  }
};

namespace detail {

inline bool cmp_holds(int cmp, CmpOp op) {
  switch (op) {
    case CmpOp::eq: return cmp == 0;
    case CmpOp::lt: return cmp < 0;
    case CmpOp::le: return cmp <= 0;
    case CmpOp::gt: return cmp > 0;
    case CmpOp::ge: return cmp >= 0;
  }
  return false;
}

inline bool eval_pred(const Table& t, RowId row, const BoundPred& p) {
  Value lhs = t.value(row, p.col);
  Value rhs = p.rhs_is_column ? t.value(row, p.rhs_col) : p.rhs_value;
  return cmp_holds(compare_values(lhs, rhs), p.op);
}

inline bool eval_preds(const Table& t, RowId row,
                       std::span<const BoundPred> preds) {
  for (const auto& p : preds)
    if (!eval_pred(t, row, p)) return false;
  return true;
}

inline bool eval_cross(const Table& base, RowId base_row, const Table& inner,
                       RowId inner_row, const BoundPred& p) {
  const Table& lt = p.on_base ? base : inner;
  RowId lr = p.on_base ? base_row : inner_row;
  const Table& rt = p.rhs_on_base ? base : inner;
  RowId rr = p.rhs_on_base ? base_row : inner_row;
  return cmp_holds(compare_values(lt.value(lr, p.col), rt.value(rr, p.rhs_col)),
                   p.op);
}

inline std::vector<ProbeCondition> probe_conditions(
    const Table& t, std::span<const BoundPred> matched) {
  std::vector<ProbeCondition> out;
  out.reserve(matched.size());
  for (const auto& m : matched)
    out.push_back({t.schema().columns[m.col].name, m.op, m.rhs_value});
  return out;
}

/// Pages charged for one index access that fetched `fetched` of `rows` rows.
inline double index_access_pages(const IndexStats& stats, std::uint64_t fetched,
                                 const Table& table, const Config& cfg) {
  const double rows = static_cast<double>(std::max<std::uint64_t>(table.row_count(), 1));
  const double frac = static_cast<double>(fetched) / rows;
  const double table_pages = static_cast<double>(
      page_count(table.row_count() * table.row_width_bytes(), cfg.page_size));
  return static_cast<double>(stats.height) +
         frac * static_cast<double>(stats.leaf_pages) +
         frac * table_pages * cfg.fetch_factor;
}

inline void ensure_executable(const PlanNode& node, const IndexManager& indexes) {
  if (node.kind == PlanNode::Kind::index_scan) {
    const IndexDescriptor& d = indexes.descriptor(node.index_id);
    if (d.mode == IndexMode::hypothetical)
      fail(errc::hypothetical_in_plan,
           node.index_id + " is hypothetical and cannot appear in an executable plan");
  }
  if (node.outer) ensure_executable(*node.outer, indexes);
  if (node.inner) ensure_executable(*node.inner, indexes);
}

/// Runs a single-table scan node and returns matching row ids.
inline std::vector<RowId> run_scan(const PlanNode& node, const Table& table,
                                   IndexManager& indexes, const Config& cfg,
                                   std::uint64_t now, double& pages) {
  std::vector<RowId> out;
  if (node.kind == PlanNode::Kind::table_scan) {
    pages += cost_table_scan(table, cfg).pages;
    for (RowId r = 0; r < table.row_count(); ++r)
      if (eval_preds(table, r, node.residual)) out.push_back(r);
    return out;
  }
  auto conditions = probe_conditions(table, node.matched);
  std::vector<RowId> fetched = indexes.probe(node.index_id, conditions, now);
  pages += index_access_pages(indexes.descriptor(node.index_id).stats,
                              fetched.size(), table, cfg);
  for (RowId r : fetched)
    if (eval_preds(table, r, node.residual)) out.push_back(r);
  return out;
}

}  // namespace detail

/// Executes a plan tree. Scans honor their matched/residual predicate
/// split; joins loop over the outer side and either rescan or probe the
/// inner side per row. Plans referencing hypothetical indexes are rejected.
inline ResultSet execute(const PlanNode& node, const Catalog& catalog,
                         IndexManager& indexes, const Config& cfg,
                         std::uint64_t now) {
  detail::ensure_executable(node, indexes);
  ResultSet rs;

  if (node.kind != PlanNode::Kind::nested_loop_join) {
    const Table& table = catalog.table(node.table);
    rs.base = &table;
    for (const auto& c : table.schema().columns) rs.columns.push_back(c.name);
    rs.base_rows = detail::run_scan(node, table, indexes, cfg, now, rs.actual_pages);
    return rs;
  }

  const Table& base = catalog.table(node.outer->table);
  const Table& inner = catalog.table(node.inner->table);
  rs.base = &base;
  rs.inner = &inner;
  for (const auto& c : base.schema().columns)
    rs.columns.push_back(base.name() + "." + c.name);
  for (const auto& c : inner.schema().columns)
    rs.columns.push_back(inner.name() + "." + c.name);

  std::vector<RowId> outer_rows = detail::run_scan(
      *node.outer, base, indexes, cfg, now, rs.actual_pages);

  const bool inner_indexed = node.inner->kind == PlanNode::Kind::index_scan;
  const IndexStats* inner_stats = nullptr;
  std::vector<ProbeCondition> probe_template;
  if (inner_indexed) {
    inner_stats = &indexes.descriptor(node.inner->index_id).stats;
    probe_template.push_back(
        {inner.schema().columns[node.join_inner_col].name, CmpOp::eq, Value()});
    auto extra = detail::probe_conditions(inner, node.inner->matched);
    probe_template.insert(probe_template.end(), extra.begin(), extra.end());
  }

  const double inner_scan_pages = cost_table_scan(inner, cfg).pages;
  for (RowId outer_row : outer_rows) {
    Value key = base.value(outer_row, node.join_outer_col);
    if (inner_indexed) {
      probe_template[0].value = key;
      std::vector<RowId> fetched =
          indexes.probe(node.inner->index_id, probe_template, now);
      rs.actual_pages += detail::index_access_pages(*inner_stats, fetched.size(),
                                                    inner, cfg);
      for (RowId r : fetched) {
        if (!detail::eval_preds(inner, r, node.inner->residual)) continue;
        bool keep = true;
        for (const auto& p : node.cross_residual)
          if (!detail::eval_cross(base, outer_row, inner, r, p)) {
            keep = false;
            break;
          }
        if (keep) {
          rs.base_rows.push_back(outer_row);
          rs.inner_rows.push_back(r);
        }
      }
    } else {
      rs.actual_pages += inner_scan_pages;
      for (RowId r = 0; r < inner.row_count(); ++r) {
        if (compare_values(inner.value(r, node.join_inner_col), key) != 0)
          continue;
        if (!detail::eval_preds(inner, r, node.inner->residual)) continue;
        bool keep = true;
        for (const auto& p : node.cross_residual)
          if (!detail::eval_cross(base, outer_row, inner, r, p)) {
            keep = false;
            break;
          }
        if (keep) {
          rs.base_rows.push_back(outer_row);
          rs.inner_rows.push_back(r);
        }
      }
    }
  }
  return rs;
}

/// Reference executor: always full scans, never touches an index. Used to
/// cross-check the plan-driven path.
inline ResultSet oracle_execute(const QueryAst& ast, const Catalog& catalog,
                                const Config& cfg) {
  ResolvedQuery rq = resolve(catalog, ast);
  ResultSet rs;
  const Table& base = *rq.base;
  rs.base = &base;

  if (!rq.inner) {
    for (const auto& c : base.schema().columns) rs.columns.push_back(c.name);
    rs.actual_pages = cost_table_scan(base, cfg).pages;
    for (RowId r = 0; r < base.row_count(); ++r)
      if (detail::eval_preds(base, r, rq.base_preds)) rs.base_rows.push_back(r);
    return rs;
  }

  const Table& inner = *rq.inner;
  rs.inner = &inner;
  for (const auto& c : base.schema().columns)
    rs.columns.push_back(base.name() + "." + c.name);
  for (const auto& c : inner.schema().columns)
    rs.columns.push_back(inner.name() + "." + c.name);

  const double inner_scan_pages = cost_table_scan(inner, cfg).pages;
  rs.actual_pages = cost_table_scan(base, cfg).pages;
  for (RowId b = 0; b < base.row_count(); ++b) {
    if (!detail::eval_preds(base, b, rq.base_preds)) continue;
    rs.actual_pages += inner_scan_pages;
    Value key = base.value(b, rq.join_base_col);
    for (RowId i = 0; i < inner.row_count(); ++i) {
      if (compare_values(inner.value(i, rq.join_inner_col), key) != 0) continue;
      if (!detail::eval_preds(inner, i, rq.inner_preds)) continue;
      bool keep = true;
      for (const auto& p : rq.cross_preds)
        if (!detail::eval_cross(base, b, inner, i, p)) {
          keep = false;
          break;
        }
      if (keep) {
        rs.base_rows.push_back(b);
        rs.inner_rows.push_back(i);
      }
    }
  }
  return rs;
}

}  // namespace jitdb
