#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
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

/// How one query moved through the adaptive layer.
enum class JitPath { below_threshold, scanner_hit, index_created, index_rejected };

inline const char* jit_path_name(JitPath p) {
  switch (p) {
    case JitPath::below_threshold: return "below-threshold";
    case JitPath::scanner_hit: return "scanner-hit";
    case JitPath::index_created: return "index-created";
    case JitPath::index_rejected: return "index-rejected";
  }
  return "?";
}

/// One processed query as remembered by the engine. The AST is kept so
/// later candidate generation can replay the workload.
struct QueryHistoryEntry {
  std::string query;  // canonical text
  QueryAst ast;
  double cost_pages = 0.0;        // conventional-plan cost
  std::int64_t normalized_cost = 0;
  std::uint64_t timestamp = 0;
  bool triggered = false;
};

/// Estimated page accesses collapsed to a coarse integer scale:
/// ceil(pages / norm_unit), which is 0 only for a zero estimate.
inline std::int64_t normalized_cost(const CostEstimate& cost, const Config& cfg) {
  return static_cast<std::int64_t>(std::ceil(cost.pages / cfg.norm_unit));
}

/// The trigger threshold at submission time. Static mode returns the
/// configured constant; dynamic mode returns the rounded mean of the
/// normalized costs seen so far, falling back to the constant while the
/// history is empty.
inline std::int64_t current_threshold(const Config& cfg,
                                      std::span<const QueryHistoryEntry> history) {
  if (cfg.threshold_mode == ThresholdMode::static_mode || history.empty())
    return cfg.static_threshold;
  double sum = 0.0;
  for (const auto& e : history) sum += static_cast<double>(e.normalized_cost);
  return std::llround(sum / static_cast<double>(history.size()));
}

// ---------------------------------------------------------------------------
// Scanner
// ---------------------------------------------------------------------------

struct ScanResult {
  std::string index_id;
  double cost = 0.0;
};

/// Looks for an existing real index the planner would actually use: the
/// cheapest plan over every real index must involve an index and undercut
/// the index-free plan. A hit refreshes the index's last_used stamp.
inline std::optional<ScanResult> scan_for_index(const ResolvedQuery& rq,
                                                IndexManager& indexes,
                                                const Config& cfg,
                                                std::uint64_t now) {
  auto real = indexes.real_indexes();
  if (real.empty()) return std::nullopt;
  auto with = enumerate_plans(rq, real, cfg);
  auto without = enumerate_plans(rq, {}, cfg);
  const PlanAlt& best = with.front();
  if (best.index_id == "-" || best.cost >= without.front().cost)
    return std::nullopt;
  indexes.touch(best.index_id, now);
  return ScanResult{best.index_id, best.cost};
}

// ---------------------------------------------------------------------------
// Candidate generation
// ---------------------------------------------------------------------------

/// A candidate column list for one table, with the screening numbers that
/// ranked it. `pages_saved_upper_bound` is an optimistic total over the
/// recorded query log; `maintenance_cost` amortizes one build (a full table
/// scan) over the expected reuse count plus a per-update charge.
struct CandidateIndex {
  std::string table;
  std::vector<std::string> columns;
  double pages_saved_upper_bound = 0.0;
  double maintenance_cost = 0.0;

  double benefit_ratio() const {
    return maintenance_cost > 0.0 ? pages_saved_upper_bound / maintenance_cost
                                  : pages_saved_upper_bound;
  }
};

namespace detail {

struct DomainColumn {
  std::string table;
  std::string column;
  std::uint64_t usage = 0;
  double uniqueness = 0.0;  // ndv / rows
};

/// Cheapest cost of answering `rq` when `extra` is offered to the planner
/// alongside `others`, restricted to plans that actually use `extra`.
/// Returns nothing when no enumerated plan uses it.
inline std::optional<double> best_cost_using(
    const ResolvedQuery& rq, const IndexDescriptor& extra,
    std::span<const IndexDescriptor* const> others, const Config& cfg) {
  std::vector<const IndexDescriptor*> all(others.begin(), others.end());
  all.push_back(&extra);
  for (const auto& alt : enumerate_plans(rq, all, cfg))
    if (alt.index_id == extra.id) return alt.cost;
  return std::nullopt;
}

/// Optimistic pages saved by `candidate` over the recorded log: for every
/// logged query it can serve, the gap between that query's conventional
/// cost and its best candidate-backed cost.
inline double pages_saved_upper_bound(const IndexDescriptor& candidate,
                                      std::span<const QueryHistoryEntry> history,
                                      const Catalog& catalog, const Config& cfg) {
  double saved = 0.0;
  for (const auto& entry : history) {
    ResolvedQuery rq = resolve(catalog, entry.ast);
    auto cost = best_cost_using(rq, candidate, {}, cfg);
    if (!cost) continue;
    saved += std::max(0.0, entry.cost_pages - *cost);
  }
  return saved;
}

}  // namespace detail

/// Derives candidate index column lists for a triggering query:
///
///   (a) collect the domain: sargable WHERE columns plus both join columns
///   (b) rank by usage frequency, keep the busiest rank_cutoff_p; columns
///       whose only recorded use is the triggering query are never dropped
///       here, otherwise a fresh column could never be indexed
///   (c) rank the survivors by uniqueness (ndv / rows), keep unique_cutoff_m
///   (d) enumerate per-table column subsets up to max_width_mprime wide,
///       each ordered by descending uniqueness
///   (e) screen each subset: optimistic pages saved over the query log must
///       cover its maintenance cost
///   (f) keep the advance_tprime best ratios for the hypothetical stage
inline std::vector<CandidateIndex> generate_candidates(
    const ResolvedQuery& rq, const Catalog& catalog, const Config& cfg,
    std::span<const QueryHistoryEntry> history) {
  // (a) domain collection.
  std::vector<detail::DomainColumn> domain;
  std::set<std::pair<std::string, std::string>> seen;
  auto add = [&](const Table& t, std::size_t col) {
    const std::string& name = t.schema().columns[col].name;
    if (!seen.emplace(t.name(), name).second) return;
    detail::DomainColumn d;
    d.table = t.name();
    d.column = name;
    d.usage = t.stats(col).usage_count;
    d.uniqueness = t.row_count() == 0
                       ? 0.0
                       : static_cast<double>(t.stats(col).ndv) /
                             static_cast<double>(t.row_count());
    domain.push_back(std::move(d));
  };
  for (const auto& p : rq.base_preds)
    if (p.sargable()) add(*rq.base, p.col);
  for (const auto& p : rq.inner_preds)
    if (p.sargable()) add(*rq.inner, p.col);
  if (rq.inner) {
    add(*rq.base, rq.join_base_col);
    add(*rq.inner, rq.join_inner_col);
  }
  if (domain.empty()) return {};

  // (b) frequency ranking.
  auto freq_order = [&](const detail::DomainColumn& a,
                        const detail::DomainColumn& b) {
    if (a.usage != b.usage)
      return cfg.frequency_rank == FrequencyRank::descending
                 ? a.usage > b.usage
                 : a.usage < b.usage;
    if (a.uniqueness != b.uniqueness) return a.uniqueness > b.uniqueness;
    return std::tie(a.table, a.column) < std::tie(b.table, b.column);
  };
  std::sort(domain.begin(), domain.end(), freq_order);
  if (domain.size() > cfg.rank_cutoff_p) {
    std::vector<detail::DomainColumn> kept(domain.begin(),
                                           domain.begin() + cfg.rank_cutoff_p);
    // First-seen columns stay in play even when ranked out.
    for (std::size_t i = cfg.rank_cutoff_p; i < domain.size(); ++i)
      if (domain[i].usage <= 1) kept.push_back(domain[i]);
    domain = std::move(kept);
  }

  // (c) uniqueness ranking.
  std::sort(domain.begin(), domain.end(),
            [](const detail::DomainColumn& a, const detail::DomainColumn& b) {
              if (a.uniqueness != b.uniqueness) return a.uniqueness > b.uniqueness;
              if (a.usage != b.usage) return a.usage > b.usage;
              return std::tie(a.table, a.column) < std::tie(b.table, b.column);
            });
  if (domain.size() > cfg.unique_cutoff_m) domain.resize(cfg.unique_cutoff_m);

  // (d) per-table subsets, columns ordered by descending uniqueness (the
  // sort above fixed that order within each table).
  std::map<std::string, std::vector<const detail::DomainColumn*>> by_table;
  for (const auto& d : domain) by_table[d.table].push_back(&d);

  std::vector<CandidateIndex> candidates;
  for (const auto& [table_name, cols] : by_table) {
    const std::size_t n = cols.size();
    for (std::uint64_t mask = 1; mask < (1ULL << n); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcountll(mask)) >
          cfg.max_width_mprime)
        continue;
      CandidateIndex c;
      c.table = table_name;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1ULL << i)) c.columns.push_back(cols[i]->column);
      candidates.push_back(std::move(c));
    }
  }

  // (e) benefit screening against maintenance cost.
  std::vector<CandidateIndex> screened;
  for (auto& c : candidates) {
    const Table& t = catalog.table(c.table);
    IndexDescriptor probe;
    probe.id = "?cand";
    probe.table = c.table;
    probe.columns = c.columns;
    probe.mode = IndexMode::hypothetical;
    std::vector<std::size_t> idx;
    for (const auto& col : c.columns)
      idx.push_back(*t.schema().column_index(col));
    probe.stats = estimate_index_stats(t, idx, cfg);

    c.pages_saved_upper_bound =
        detail::pages_saved_upper_bound(probe, history, catalog, cfg);
    const double build = cost_table_scan(t, cfg).pages;
    const double per_update = static_cast<double>(probe.stats.height) + 1.0;
    c.maintenance_cost = build / cfg.expected_reuse + per_update * cfg.update_rate;
    if (c.pages_saved_upper_bound >= c.maintenance_cost)
      screened.push_back(std::move(c));
  }

  // (f) rank by benefit ratio and truncate.
  std::sort(screened.begin(), screened.end(),
            [](const CandidateIndex& a, const CandidateIndex& b) {
              double ra = a.benefit_ratio(), rb = b.benefit_ratio();
              if (ra != rb) return ra > rb;
              if (a.columns.size() != b.columns.size())
                return a.columns.size() < b.columns.size();
              return std::tie(a.table, a.columns) < std::tie(b.table, b.columns);
            });
  if (screened.size() > cfg.advance_tprime) screened.resize(cfg.advance_tprime);
  return screened;
}

// ---------------------------------------------------------------------------
// Selection
// ---------------------------------------------------------------------------

struct SelectedIndex {
  std::string table;
  std::vector<std::string> columns;
  double cost = 0.0;        // modeled cost of the query using this index
  std::uint64_t size_bytes = 0;
};

/// Builds a hypothetical index per candidate (statistics only), costs the
/// query against each, and picks the cheapest; ties prefer the smaller
/// index, then fewer columns, then name order. Every hypothetical index is
/// dropped before returning, success or not. Returns nothing when even the
/// best candidate fails to beat the index-free plan.
inline std::optional<SelectedIndex> select_best_index(
    const ResolvedQuery& rq, std::span<const CandidateIndex> candidates,
    const Catalog& catalog, IndexManager& indexes, const Config& cfg,
    std::uint64_t now) {
  if (candidates.empty()) return std::nullopt;

  struct HypoGuard {
    IndexManager& indexes;
    std::vector<std::string> ids;
    ~HypoGuard() {
      for (const auto& id : ids) indexes.drop_index(id);
    }
  } guard{indexes, {}};

  std::vector<const IndexDescriptor*> hypos;
  for (const auto& c : candidates) {
    const IndexDescriptor& d = indexes.build_index(
        catalog, c.table, c.columns, IndexMode::hypothetical, IndexKind::jit,
        cfg, now);
    guard.ids.push_back(d.id);
    hypos.push_back(&d);
  }

  const double scan_cost = enumerate_plans(rq, {}, cfg).front().cost;
  std::optional<SelectedIndex> best;
  for (std::size_t i = 0; i < hypos.size(); ++i) {
    auto cost = detail::best_cost_using(rq, *hypos[i], {}, cfg);
    if (!cost) continue;
    SelectedIndex s;
    s.table = candidates[i].table;
    s.columns = candidates[i].columns;
    s.cost = *cost;
    s.size_bytes = hypos[i]->stats.size_bytes;
    if (!best) {
      best = std::move(s);
      continue;
    }
    bool better = false;
    if (s.cost != best->cost) {
      better = s.cost < best->cost;
    } else if (s.size_bytes != best->size_bytes) {
      better = s.size_bytes < best->size_bytes;
    } else if (s.columns.size() != best->columns.size()) {
      better = s.columns.size() < best->columns.size();
    } else {
      better = std::tie(s.table, s.columns) < std::tie(best->table, best->columns);
    }
    if (better) best = std::move(s);
  }
  if (!best || best->cost >= scan_cost) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Ageing
// ---------------------------------------------------------------------------

/// Drops least-recently-used JIT indexes until at most `capacity` remain.
/// Ties fall back to creation time, then id. Conventional indexes are never
/// touched. Returns the dropped ids, in drop order.
inline std::vector<std::string> evict_if_needed(IndexManager& indexes,
                                                const Config& cfg) {
  std::vector<std::string> dropped;
  while (true) {
    auto live = indexes.live_jit_indexes();
    if (live.size() <= cfg.capacity) break;
    const IndexDescriptor* victim = live.front();
    for (const auto* d : live) {
      auto key = std::make_tuple(d->last_used, d->created_at, d->id);
      auto vkey = std::make_tuple(victim->last_used, victim->created_at,
                                  victim->id);
      if (key < vkey) victim = d;
    }
    dropped.push_back(victim->id);
    indexes.drop_index(victim->id);
  }
  return dropped;
}

}  // namespace jitdb
