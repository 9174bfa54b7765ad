#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"
#include "jitdb/config.hpp"
#include "jitdb/executor.hpp"
#include "jitdb/index.hpp"
#include "jitdb/jit.hpp"
#include "jitdb/planner.hpp"
#include "jitdb/sql.hpp"

namespace jitdb {

/// Everything the engine can say about one processed query.
struct ExecutionOutcome {
  ResultSet result;  // empty in compile-only mode
  /// Cost of the best plan ignoring JIT-built indexes.
  double unindexed_cost = 0.0;
  /// Modeled cost of the best index-backed plan discovered this round, or
  /// the unindexed cost when no index came into play.
  double indexed_cost = 0.0;
  std::int64_t normalized = 0;
  std::int64_t threshold = 0;
  JitPath path = JitPath::below_threshold;
  std::optional<std::string> index_used;
  bool executed = false;
};

/// Row of the explain log kept for stats export.
struct ExplainLogRow {
  std::string query;
  std::string scan_object;
  std::string index_id;
  double cost = 0.0;
  double out_rows = 0.0;
  bool executed = false;
};

/// Record of one real JIT index build, for cost accounting.
struct BuildRecord {
  std::string index_id;
  std::string table;
  double build_cost_pages = 0.0;  // one full scan of the base table
  std::uint64_t timestamp = 0;
};

/// Extended history row: the shared QueryHistoryEntry plus the outcome
/// fields the stats export publishes.
struct HistoryRow {
  QueryHistoryEntry entry;
  std::int64_t threshold = 0;
  double indexed_cost = 0.0;
  JitPath path = JitPath::below_threshold;
  std::string index_used = "-";
};

/// The embedded engine: catalog, index manager, planner and the adaptive
/// indexing layer behind one serialized entry point. Queries are processed
/// end-to-end under a single lock; reads of returned results are safe until
/// the next catalog mutation.
class Engine {
 public:
  explicit Engine(Config cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

  Catalog& catalog() { return catalog_; }
  const Catalog& catalog() const { return catalog_; }
  IndexManager& indexes() { return indexes_; }
  const IndexManager& indexes() const { return indexes_; }
  Config& config() { return cfg_; }
  const Config& config() const { return cfg_; }

  std::uint64_t clock() const { return clock_; }

  const std::vector<QueryHistoryEntry>& history() const { return history_; }
  const std::vector<HistoryRow>& history_rows() const { return history_rows_; }
  const std::vector<std::string>& event_log() const { return events_; }
  const std::vector<std::string>& eviction_log() const { return evictions_; }
  const std::vector<BuildRecord>& build_log() const { return builds_; }
  const std::vector<ExplainLogRow>& explain_log() const { return explain_log_; }
  std::uint64_t executed_query_count() const { return executed_queries_; }

  /// Runs one query through the adaptive pipeline:
  ///
  ///   1. parse, record column usage, cost the conventional plan (C)
  ///   2. normalize C and compare against the current threshold (A vs B)
  ///   3. below threshold: run the conventional plan
  ///   4. above: scan for an existing usable index; on a hit, run with it
  ///   5. otherwise derive candidates, cost them as hypothetical indexes,
  ///      and build the winner as a real JIT index for subsequent queries;
  ///      the triggering query itself still runs on the conventional plan
  ///   6. age out least-recently-used JIT indexes beyond the capacity bound
  ///
  /// With `execute` false the same decisions run but no result is produced
  /// (compile-only mode).
  ExecutionOutcome process(const std::string& sql, bool execute = true) {
    std::lock_guard<std::mutex> lock(mutex_);
    try {
      return process_locked(sql, execute);
    } catch (const Error& e) {
      throw Error(e.code(), err_body(e) + " [query: " + sql + "]", e.offset());
    }
  }

  /// Pure planner view of a query against the current real indexes; no
  /// adaptive machinery, no usage recording. The report is appended to the
  /// explain log. With `execute` true the chosen plan also runs.
  ExplainReport explain(const std::string& sql, bool execute = false) {
    std::lock_guard<std::mutex> lock(mutex_);
    QueryAst ast = parse(sql);
    ResolvedQuery rq = resolve(catalog_, ast);
    auto real = indexes_.real_indexes();
    ExplainReport rep = explain_query(rq, real, cfg_, execute);
    if (execute) {
      auto tree = build_plan(rep.chosen, rq);
      jitdb::execute(*tree, catalog_, indexes_, cfg_, clock_);
      ++executed_queries_;
    }
    explain_log_.push_back({rep.query, rep.scan_object, rep.chosen.index_id,
                            rep.chosen.cost, rep.chosen.out_rows, execute});
    return rep;
  }

  /// Drops every JIT-built index; conventional indexes and statistics stay.
  void reset_jit() {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto* d : indexes_.live_jit_indexes()) indexes_.drop_index(d->id);
  }

  /// Writes the query history and explain log as engine-loadable CSVs into
  /// `dir`. Returns the total data rows written.
  std::size_t export_stats(const std::filesystem::path& dir) const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(errc::io_error, "cannot create " + dir.string());

    std::size_t rows = 0;
    {
      std::ofstream out(dir / "query_history.csv");
      if (!out) fail(errc::io_error, "cannot write query_history.csv");
      out << "QUERY_TEXT,NORMALIZED_A,THRESHOLD_B,TRIGGERED,PATH,COST_C,COST_D,"
             "INDEX_USED,TS\n";
      for (const auto& r : history_rows_) {
        out << r.entry.query << ',' << r.entry.normalized_cost << ','
            << r.threshold << ',' << (r.entry.triggered ? 1 : 0) << ','
            << jit_path_name(r.path) << ','
            << static_cast<long long>(std::llround(r.entry.cost_pages)) << ','
            << static_cast<long long>(std::llround(r.indexed_cost)) << ','
            << r.index_used << ',' << r.entry.timestamp << '\n';
        ++rows;
      }
    }
    {
      std::ofstream out(dir / "explain_log.csv");
      if (!out) fail(errc::io_error, "cannot write explain_log.csv");
      out << "QUERY_TEXT,SCAN_OBJECT,INDEX_ID,COST,ROWS,EXECUTED\n";
      for (const auto& r : explain_log_) {
        out << r.query << ',' << r.scan_object << ',' << r.index_id << ','
            << static_cast<long long>(std::llround(r.cost)) << ','
            << static_cast<long long>(std::llround(r.out_rows)) << ','
            << (r.executed ? 1 : 0) << '\n';
        ++rows;
      }
    }
    return rows;
  }

  void save(const std::filesystem::path& dir) const {
    std::lock_guard<std::mutex> lock(mutex_);
    catalog_.save(dir);
  }

  void load(const std::filesystem::path& dir) {
    std::lock_guard<std::mutex> lock(mutex_);
    catalog_.load(dir);
  }

 private:
  static std::string err_body(const Error& e) {
    // what() is "<code>: <message>"; keep only the message so re-wrapping
    // does not stack code prefixes.
    std::string w = e.what();
    std::string prefix = std::string(errc_name(e.code())) + ": ";
    return w.rfind(prefix, 0) == 0 ? w.substr(prefix.size()) : w;
  }

  ExecutionOutcome process_locked(const std::string& sql, bool execute) {
    const std::uint64_t now = ++clock_;
    QueryAst ast = parse(sql);
    const std::string canonical = render(ast);
    ResolvedQuery rq = resolve(catalog_, ast);
    record_column_usage(catalog_, ast);

    auto conventional = indexes_.conventional_indexes();
    auto conv_alts = enumerate_plans(rq, conventional, cfg_);
    const double cost_c = conv_alts.front().cost;

    const std::int64_t threshold = current_threshold(cfg_, history_);
    const std::int64_t normalized = normalized_cost({cost_c}, cfg_);
    const bool triggered = cfg_.jit_enabled && normalized > threshold;

    QueryHistoryEntry entry{canonical, ast, cost_c, normalized, now, triggered};
    history_.push_back(entry);

    ExecutionOutcome out;
    out.unindexed_cost = cost_c;
    out.indexed_cost = cost_c;
    out.normalized = normalized;
    out.threshold = threshold;

    log_event("ALERT", canonical, normalized, threshold,
              triggered ? "triggered" : "below-threshold", "-");

    if (!triggered) {
      out.path = JitPath::below_threshold;
      if (execute) run_plan(build_plan(conv_alts.front(), rq), out);
    } else if (auto hit = scan_for_index(rq, indexes_, cfg_, now)) {
      out.path = JitPath::scanner_hit;
      out.indexed_cost = hit->cost;
      out.index_used = hit->index_id;
      log_event("SCAN", canonical, normalized, threshold, "scanner-hit",
                hit->index_id);
      if (execute) {
        auto real = indexes_.real_indexes();
        run_plan(plan(rq, real, cfg_), out);
      }
    } else {
      log_event("SCAN", canonical, normalized, threshold, "scanner-miss", "-");
      auto candidates = generate_candidates(rq, catalog_, cfg_, history_);
      auto best = select_best_index(rq, candidates, catalog_, indexes_, cfg_, now);
      if (best && best->cost < cost_c) {
        const IndexDescriptor& built =
            indexes_.build_index(catalog_, best->table, best->columns,
                                 IndexMode::real, IndexKind::jit, cfg_, now);
        builds_.push_back({built.id, built.table,
                           cost_table_scan(catalog_.table(built.table), cfg_).pages,
                           now});
        out.path = JitPath::index_created;
        out.indexed_cost = best->cost;
        out.index_used = built.id;
        log_event("INDEX", canonical, normalized, threshold, "index-created",
                  built.id);
        for (const auto& id : evict_if_needed(indexes_, cfg_)) {
          evictions_.push_back(id);
          log_event("EVICT", canonical, normalized, threshold, "evicted", id);
        }
        // The new index serves queries from the next submission on; this
        // one still runs on the plan it was costed with.
        if (execute) run_plan(build_plan(conv_alts.front(), rq), out);
      } else {
        out.path = JitPath::index_rejected;
        if (best) out.indexed_cost = best->cost;
        log_event("INDEX", canonical, normalized, threshold, "index-rejected",
                  "-");
        if (execute) run_plan(build_plan(conv_alts.front(), rq), out);
      }
    }

    history_rows_.push_back({std::move(entry), threshold, out.indexed_cost,
                             out.path,
                             out.index_used ? *out.index_used : "-"});
    return out;
  }

  void run_plan(std::unique_ptr<PlanNode> tree, ExecutionOutcome& out) {
    out.result = jitdb::execute(*tree, catalog_, indexes_, cfg_, clock_);
    out.executed = true;
    ++executed_queries_;
  }

  void log_event(const char* phase, const std::string& canonical,
                 std::int64_t a, std::int64_t b, const std::string& path,
                 const std::string& index_id) {
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    events_.push_back(std::string("JIT ") + phase + " query=" + hash +
                      " A=" + std::to_string(a) + " B=" + std::to_string(b) +
                      " path=" + path + " index=" + index_id);
  }

  Config cfg_;
  Catalog catalog_;
  IndexManager indexes_;
  mutable std::mutex mutex_;
  std::uint64_t clock_ = 0;
  std::uint64_t executed_queries_ = 0;
  std::vector<QueryHistoryEntry> history_;
  std::vector<HistoryRow> history_rows_;
  std::vector<std::string> events_;
  std::vector<std::string> evictions_;
  std::vector<BuildRecord> builds_;
  std::vector<ExplainLogRow> explain_log_;
};

}  // namespace jitdb
