#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "jitdb/common.hpp"
#include "jitdb/dataset.hpp"
#include "jitdb/engine.hpp"

namespace jitdb {

/// The four standard benchmark queries over the exam dataset: a point
/// predicate, a two-column conjunction, a column-to-column comparison no
/// index can serve, and a join.
inline const std::vector<std::pair<std::string, std::string>>&
benchmark_queries() {
  static const std::vector<std::pair<std::string, std::string>> qs = {
      {"Q1", "SELECT * FROM PHYSICSMARKS WHERE M1 = 1"},
      {"Q2", "SELECT * FROM PHYSICSMARKS WHERE M1 = 2 AND M2 = 1"},
      {"Q3", "SELECT * FROM PHYSICSMARKS WHERE M1 = M2"},
      {"Q4",
       "SELECT * FROM CHEMISTRYMARKS INNER JOIN PHYSICSMARKS ON "
       "CHEMISTRYMARKS.M1 = PHYSICSMARKS.M1"}};
  return qs;
}

/// One benchmark group: the query run three ways — adaptive layer off, then
/// a cold adaptive submission (typically building an index) and a warm one
/// (typically served by it).
struct BenchRow {
  std::string id;
  std::string sql;
  double cost_off = 0.0;  // modeled cost, adaptive layer off
  double cost_jit = 0.0;  // modeled cost of the warm adaptive run
  std::int64_t normalized_a = 0;
  std::int64_t threshold_b = 0;
  std::string cold_path;
  std::string warm_path;
  std::string index_id = "-";
  std::string scan_object_before;  // "Table" or "Index", pre-benchmark plan
  std::string scan_object_after;
  double wall_off_ms = 0.0;
  double wall_cold_ms = 0.0;
  double wall_warm_ms = 0.0;

  double ratio() const { return cost_off > 0.0 ? cost_jit / cost_off : 1.0; }
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// Plan reports captured before the cold run and after the warm run,
  /// labeled "<id> before" / "<id> after".
  std::vector<std::pair<std::string, std::string>> explain_texts;

  std::string to_table() const {
    char line[512];
    std::string out;
    std::snprintf(line, sizeof line,
                  "%-4s %12s %12s %6s %6s %-16s %-16s %-24s %-6s %-6s %7s\n",
                  "ID", "COST_OFF", "COST_JIT", "A", "B", "COLD_PATH",
                  "WARM_PATH", "INDEX", "BEFORE", "AFTER", "RATIO");
    out += line;
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line,
                    "%-4s %12.1f %12.1f %6lld %6lld %-16s %-16s %-24s %-6s "
                    "%-6s %7.4f\n",
                    r.id.c_str(), r.cost_off, r.cost_jit,
                    static_cast<long long>(r.normalized_a),
                    static_cast<long long>(r.threshold_b),
                    r.cold_path.c_str(), r.warm_path.c_str(),
                    r.index_id.c_str(), r.scan_object_before.c_str(),
                    r.scan_object_after.c_str(), r.ratio());
      out += line;
    }
    return out;
  }

  std::string to_csv() const {
    char line[512];
    std::string out =
        "ID,COST_OFF,COST_JIT,A,B,COLD_PATH,WARM_PATH,INDEX,"
        "SCAN_OBJECT_BEFORE,SCAN_OBJECT_AFTER,RATIO,"
        "WALL_OFF_MS,WALL_COLD_MS,WALL_WARM_MS\n";
    for (const auto& r : rows) {
      std::snprintf(line, sizeof line,
                    "%s,%.4f,%.4f,%lld,%lld,%s,%s,%s,%s,%s,%.6f,%.3f,%.3f,%.3f\n",
                    r.id.c_str(), r.cost_off, r.cost_jit,
                    static_cast<long long>(r.normalized_a),
                    static_cast<long long>(r.threshold_b),
                    r.cold_path.c_str(), r.warm_path.c_str(),
                    r.index_id.c_str(), r.scan_object_before.c_str(),
                    r.scan_object_after.c_str(), r.ratio(), r.wall_off_ms,
                    r.wall_cold_ms, r.wall_warm_ms);
      out += line;
    }
    return out;
  }
};

namespace detail {

template <typename F>
double timed_ms(F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  f();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

}  // namespace detail

/// Runs the standard benchmark. Each query group starts from a clean
/// adaptive state; modeled costs drive the report, so by default queries
/// are compiled but not executed (`execute` enables materialization, which
/// is only sensible on small datasets).
inline BenchReport run_benchmark(Engine& engine, bool execute = false) {
  for (const auto& name : dataset_table_names())
    if (!engine.catalog().has_table(name))
      fail(errc::dataset_missing, "benchmark needs table " + name);

  BenchReport report;
  const bool jit_was_enabled = engine.config().jit_enabled;
  for (const auto& [id, sql] : benchmark_queries()) {
    engine.reset_jit();
    BenchRow row;
    row.id = id;
    row.sql = sql;

    ExplainReport before = engine.explain(sql);
    row.scan_object_before = before.scan_object;
    report.explain_texts.emplace_back(id + " before", format_explain(before));

    engine.config().jit_enabled = false;
    ExecutionOutcome off;
    row.wall_off_ms = detail::timed_ms([&] { off = engine.process(sql, execute); });
    engine.config().jit_enabled = true;
    row.cost_off = off.unindexed_cost;

    ExecutionOutcome cold;
    row.wall_cold_ms = detail::timed_ms([&] { cold = engine.process(sql, execute); });
    row.normalized_a = cold.normalized;
    row.threshold_b = cold.threshold;
    row.cold_path = jit_path_name(cold.path);

    ExecutionOutcome warm;
    row.wall_warm_ms = detail::timed_ms([&] { warm = engine.process(sql, execute); });
    row.warm_path = jit_path_name(warm.path);
    row.cost_jit = warm.indexed_cost;
    if (warm.index_used)
      row.index_id = *warm.index_used;
    else if (cold.index_used)
      row.index_id = *cold.index_used;

    ExplainReport after = engine.explain(sql);
    row.scan_object_after = after.scan_object;
    report.explain_texts.emplace_back(id + " after", format_explain(after));
    report.rows.push_back(std::move(row));
  }
  engine.reset_jit();
  engine.config().jit_enabled = jit_was_enabled;
  return report;
}

}  // namespace jitdb
