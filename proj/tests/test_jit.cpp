#include "catch_amalgamated.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <vector>

#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"
#include "jitdb/config.hpp"
#include "jitdb/index.hpp"
#include "jitdb/jit.hpp"
#include "jitdb/planner.hpp"
#include "jitdb/sql.hpp"

using namespace jitdb;
using Catch::Approx;

namespace {

/// MARKS(M1 0..4, M2 varies, PAD text) with enough rows that an index
/// probe comfortably beats a full scan.
Catalog marks_catalog(std::uint64_t rows = 20000, int m2_mod = 5) {
  Catalog cat;
  TableSchema s;
  s.name = "MARKS";
  s.columns = {{"M1", ColumnType::integer},
               {"M2", ColumnType::integer},
               {"PAD", ColumnType::text}};
  Table& t = cat.create_table(std::move(s));
  for (std::uint64_t r = 0; r < rows; ++r)
    t.append_row({Value{static_cast<std::int64_t>(r % 5)},
                  Value{static_cast<std::int64_t>(r % m2_mod)},
                  Value{std::string("pad")}});
  t.recompute_stats();
  return cat;
}

QueryHistoryEntry history_entry(const Catalog& cat, const std::string& sql,
                                const Config& cfg, std::uint64_t ts) {
  QueryHistoryEntry e;
  e.ast = parse(sql);
  e.query = render(e.ast);
  ResolvedQuery rq = resolve(cat, e.ast);
  e.cost_pages = plan(rq, {}, cfg)->cost.pages;
  e.normalized_cost = normalized_cost(CostEstimate{e.cost_pages}, cfg);
  e.timestamp = ts;
  return e;
}

std::vector<std::vector<std::string>> column_lists(
    const std::vector<CandidateIndex>& cands) {
  std::vector<std::vector<std::string>> out;
  for (const auto& c : cands) out.push_back(c.columns);
  return out;
}

}  // namespace

TEST_CASE("normalized cost collapses pages to coarse units", "[jit]") {
  Config cfg;  // norm_unit = 1000
  CHECK(normalized_cost(CostEstimate{6934.0}, cfg) == 7);
  CHECK(normalized_cost(CostEstimate{7032.0}, cfg) == 8);
  CHECK(normalized_cost(CostEstimate{999.5}, cfg) == 1);
  CHECK(normalized_cost(CostEstimate{1000.0}, cfg) == 1);
  CHECK(normalized_cost(CostEstimate{1000.1}, cfg) == 2);
  CHECK(normalized_cost(CostEstimate{0.0}, cfg) == 0);
  cfg.norm_unit = 500.0;
  CHECK(normalized_cost(CostEstimate{6934.0}, cfg) == 14);
}

TEST_CASE("threshold follows the configured mode", "[jit]") {
  Config cfg;
  std::vector<QueryHistoryEntry> history;

  SECTION("static mode ignores history") {
    cfg.static_threshold = 5;
    QueryHistoryEntry e;
    e.normalized_cost = 100;
    history.assign(10, e);
    CHECK(current_threshold(cfg, history) == 5);
  }

  SECTION("dynamic mode averages the log, empty log falls back") {
    cfg.threshold_mode = ThresholdMode::dynamic_mode;
    cfg.static_threshold = 3;
    CHECK(current_threshold(cfg, history) == 3);

    for (std::int64_t a : {4, 6, 8}) {
      QueryHistoryEntry e;
      e.normalized_cost = a;
      history.push_back(e);
    }
    CHECK(current_threshold(cfg, history) == 6);

    history.resize(2);  // {4, 6} -> mean 5
    CHECK(current_threshold(cfg, history) == 5);

    history[1].normalized_cost = 1;  // {4, 1} -> 2.5 rounds away from zero
    CHECK(current_threshold(cfg, history) == 3);
  }
}

TEST_CASE("index scanner only reports usable wins", "[jit]") {
  Catalog cat = marks_catalog();
  Config cfg;
  IndexManager im;
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4");
  ResolvedQuery rq = resolve(cat, q);

  CHECK(!scan_for_index(rq, im, cfg, 1).has_value());  // nothing to find

  const IndexDescriptor& d = im.build_index(cat, "MARKS", {"M1"},
                                            IndexMode::real, IndexKind::jit,
                                            cfg, 5);
  auto hit = scan_for_index(rq, im, cfg, 9);
  REQUIRE(hit.has_value());
  CHECK(hit->index_id == d.id);
  CHECK(hit->cost < plan(rq, {}, cfg)->cost.pages);
  CHECK(im.descriptor(d.id).last_used == 9);  // a hit refreshes recency

  QueryAst other = parse("SELECT * FROM MARKS WHERE M2 = 1");
  ResolvedQuery ro = resolve(cat, other);
  CHECK(!scan_for_index(ro, im, cfg, 10).has_value());
  CHECK(im.descriptor(d.id).last_used == 9);  // a miss does not touch
}

TEST_CASE("scanner rejects indexes that cannot beat a scan", "[jit]") {
  Catalog cat = marks_catalog(50);  // one-page table
  Config cfg;
  IndexManager im;
  im.build_index(cat, "MARKS", {"M1"}, IndexMode::real, IndexKind::jit, cfg, 1);
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4");
  ResolvedQuery rq = resolve(cat, q);
  CHECK(!scan_for_index(rq, im, cfg, 2).has_value());
}

TEST_CASE("candidates cover the subsets of the query's columns", "[jit]") {
  Catalog cat = marks_catalog();
  Config cfg;
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4");
  record_column_usage(cat, q);
  ResolvedQuery rq = resolve(cat, q);
  std::vector<QueryHistoryEntry> history{
      history_entry(cat, "SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4", cfg, 1)};

  auto cands = generate_candidates(rq, cat, cfg, history);
  auto lists = column_lists(cands);
  std::sort(lists.begin(), lists.end());
  CHECK(lists == std::vector<std::vector<std::string>>{
                     {"M1"}, {"M1", "M2"}, {"M2"}});
  // the two-column subset serves the whole conjunction, so its savings and
  // ratio dominate the singletons
  CHECK(cands.front().columns == std::vector<std::string>{"M1", "M2"});
  for (const auto& c : cands) {
    CHECK(c.pages_saved_upper_bound >= c.maintenance_cost);
    CHECK(c.benefit_ratio() >= cands.back().benefit_ratio());
  }
}

TEST_CASE("subset columns are ordered by descending uniqueness", "[jit]") {
  Catalog cat = marks_catalog(20000, 50);  // M2 ndv 50 > M1 ndv 5
  Config cfg;
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4");
  record_column_usage(cat, q);
  ResolvedQuery rq = resolve(cat, q);
  std::vector<QueryHistoryEntry> history{
      history_entry(cat, "SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4", cfg, 1)};

  auto cands = generate_candidates(rq, cat, cfg, history);
  bool saw_pair = false;
  for (const auto& c : cands)
    if (c.columns.size() == 2) {
      saw_pair = true;
      CHECK(c.columns == std::vector<std::string>{"M2", "M1"});
    }
  CHECK(saw_pair);
}

TEST_CASE("join queries contribute both join columns to the domain", "[jit]") {
  Catalog cat = marks_catalog();
  TableSchema s;
  s.name = "OTHER";
  s.columns = {{"M1", ColumnType::integer}, {"X", ColumnType::integer}};
  Table& t = cat.create_table(std::move(s));
  for (std::uint64_t r = 0; r < 15000; ++r)
    t.append_row({Value{static_cast<std::int64_t>(r % 5)},
                  Value{static_cast<std::int64_t>(r % 7)}});
  t.recompute_stats();

  Config cfg;
  const std::string sql =
      "SELECT * FROM MARKS INNER JOIN OTHER ON MARKS.M1 = OTHER.M1";
  QueryAst q = parse(sql);
  record_column_usage(cat, q);
  ResolvedQuery rq = resolve(cat, q);
  std::vector<QueryHistoryEntry> history{history_entry(cat, sql, cfg, 1)};

  auto cands = generate_candidates(rq, cat, cfg, history);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& c : cands)
    for (const auto& col : c.columns) seen.emplace(c.table, col);
  // a single-table candidate cannot speed up this join's outer side, so the
  // survivors all target the probed (inner) join column
  CHECK(seen.count({"OTHER", "M1"}) == 1);
  for (const auto& c : cands) CHECK(c.columns == std::vector<std::string>{"M1"});
}

TEST_CASE("frequency cutoff spares columns seen for the first time", "[jit]") {
  Catalog cat;
  TableSchema s;
  s.name = "W";
  s.columns = {{"C0", ColumnType::integer},
               {"C1", ColumnType::integer},
               {"C2", ColumnType::integer},
               {"C3", ColumnType::integer}};
  Table& t = cat.create_table(std::move(s));
  for (std::uint64_t r = 0; r < 20000; ++r)
    t.append_row({Value{static_cast<std::int64_t>(r % 10)},
                  Value{static_cast<std::int64_t>(r % 5)},
                  Value{static_cast<std::int64_t>(r % 100)},
                  Value{static_cast<std::int64_t>(r % 50)}});
  t.recompute_stats();

  Config cfg;
  cfg.rank_cutoff_p = 2;
  cfg.unique_cutoff_m = 2;
  cfg.max_width_mprime = 2;
  cfg.validate();

  // C0 and C1 are old regulars; C2 and C3 appear here for the first time.
  for (int i = 0; i < 4; ++i)
    record_column_usage(cat, parse("SELECT * FROM W WHERE C0 = 1 AND C1 = 1"));
  const std::string sql =
      "SELECT * FROM W WHERE C0 = 1 AND C1 = 1 AND C2 = 1 AND C3 = 1";
  QueryAst q = parse(sql);
  record_column_usage(cat, q);
  ResolvedQuery rq = resolve(cat, q);
  std::vector<QueryHistoryEntry> history{history_entry(cat, sql, cfg, 1)};

  auto cands = generate_candidates(rq, cat, cfg, history);
  REQUIRE(!cands.empty());
  // frequency keeps {C0, C1} plus first-timers {C2, C3}; uniqueness then
  // keeps the two highest ndv/rows columns, which are exactly C2 and C3
  std::set<std::string> used;
  for (const auto& c : cands)
    for (const auto& col : c.columns) used.insert(col);
  CHECK(used == std::set<std::string>{"C2", "C3"});
}

TEST_CASE("screening drops candidates that cannot pay their keep", "[jit]") {
  Catalog cat = marks_catalog();
  Config cfg;
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4");
  record_column_usage(cat, q);
  ResolvedQuery rq = resolve(cat, q);

  SECTION("no recorded queries means no demonstrable savings") {
    CHECK(generate_candidates(rq, cat, cfg, {}).empty());
  }

  SECTION("a punishing update rate outweighs any savings") {
    std::vector<QueryHistoryEntry> history{
        history_entry(cat, "SELECT * FROM MARKS WHERE M1 = 4", cfg, 1)};
    CHECK(!generate_candidates(rq, cat, cfg, history).empty());
    cfg.update_rate = 1e9;
    CHECK(generate_candidates(rq, cat, cfg, history).empty());
  }
}

TEST_CASE("only the best-ratio candidates advance", "[jit]") {
  Catalog cat = marks_catalog();
  Config cfg;
  cfg.advance_tprime = 1;
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4");
  record_column_usage(cat, q);
  ResolvedQuery rq = resolve(cat, q);
  std::vector<QueryHistoryEntry> history{
      history_entry(cat, "SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4", cfg, 1)};

  auto cands = generate_candidates(rq, cat, cfg, history);
  REQUIRE(cands.size() == 1);
  CHECK(cands[0].columns == std::vector<std::string>{"M1", "M2"});
}

TEST_CASE("hypothetical costing picks the cheapest candidate and cleans up",
          "[jit]") {
  Catalog cat = marks_catalog();
  Config cfg;
  IndexManager im;
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4");
  record_column_usage(cat, q);
  ResolvedQuery rq = resolve(cat, q);
  std::vector<QueryHistoryEntry> history{
      history_entry(cat, "SELECT * FROM MARKS WHERE M1 = 4 AND M2 = 4", cfg, 1)};
  auto cands = generate_candidates(rq, cat, cfg, history);
  REQUIRE(!cands.empty());

  auto pick = select_best_index(rq, cands, cat, im, cfg, 7);
  REQUIRE(pick.has_value());
  CHECK(pick->table == "MARKS");
  CHECK(pick->columns == std::vector<std::string>{"M1", "M2"});
  CHECK(pick->cost < plan(rq, {}, cfg)->cost.pages);
  CHECK(pick->size_bytes > 0);
  CHECK(im.hypothetical_count() == 0);  // the guard dropped every probe
  CHECK(im.real_indexes().empty());
}

TEST_CASE("equal-cost candidates tie-break towards the smaller index", "[jit]") {
  Catalog cat = marks_catalog();
  Config cfg;
  IndexManager im;
  // an out-of-range key makes every index cost exactly its tree height
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 99");
  ResolvedQuery rq = resolve(cat, q);
  std::vector<CandidateIndex> cands(2);
  cands[0].table = "MARKS";
  cands[0].columns = {"M1", "M2"};
  cands[1].table = "MARKS";
  cands[1].columns = {"M1"};

  auto pick = select_best_index(rq, cands, cat, im, cfg, 3);
  REQUIRE(pick.has_value());
  CHECK(pick->columns == std::vector<std::string>{"M1"});
  CHECK(im.hypothetical_count() == 0);
}

TEST_CASE("selection refuses indexes that lose to the plain scan", "[jit]") {
  Catalog cat = marks_catalog(50);  // one page: nothing can beat the scan
  Config cfg;
  IndexManager im;
  QueryAst q = parse("SELECT * FROM MARKS WHERE M1 = 4");
  ResolvedQuery rq = resolve(cat, q);
  std::vector<CandidateIndex> cands(1);
  cands[0].table = "MARKS";
  cands[0].columns = {"M1"};

  CHECK(!select_best_index(rq, cands, cat, im, cfg, 3).has_value());
  CHECK(im.hypothetical_count() == 0);
}

TEST_CASE("ageing drops least-recently-used indexes first", "[jit]") {
  Catalog cat;
  TableSchema s;
  s.name = "T";
  for (int i = 0; i < 8; ++i)
    s.columns.push_back({"C" + std::to_string(i), ColumnType::integer});
  Table& t = cat.create_table(std::move(s));
  for (std::uint64_t r = 0; r < 100; ++r) {
    Row row;
    for (int i = 0; i < 8; ++i)
      row.push_back(Value{static_cast<std::int64_t>(r % (i + 2))});
    t.append_row(row);
  }
  t.recompute_stats();

  Config cfg;
  cfg.capacity = 3;

  SECTION("randomized trials against an independent replay") {
    SplitMix64 rng(991);
    for (int trial = 0; trial < 30; ++trial) {
      IndexManager im;
      struct Sim {
        std::uint64_t last_used, created_at;
        std::string id;
      };
      std::vector<Sim> sim;
      for (int i = 0; i < 7; ++i) {
        const std::uint64_t created = i + 1;
        const IndexDescriptor& d =
            im.build_index(cat, "T", {"C" + std::to_string(i)},
                           IndexMode::real, IndexKind::jit, cfg, created);
        sim.push_back({created, created, d.id});
      }
      for (int touches = 0; touches < 10; ++touches) {
        const std::size_t pick = rng.below(7);
        const std::uint64_t ts = 10 + rng.below(20);
        if (rng.below(2) == 0) continue;
        im.touch(sim[pick].id, ts);
        sim[pick].last_used = ts;
      }
      std::sort(sim.begin(), sim.end(), [](const Sim& a, const Sim& b) {
        return std::tie(a.last_used, a.created_at, a.id) <
               std::tie(b.last_used, b.created_at, b.id);
      });
      std::vector<std::string> expect;
      for (std::size_t i = 0; i + cfg.capacity < sim.size(); ++i)
        expect.push_back(sim[i].id);

      CAPTURE(trial);
      CHECK(evict_if_needed(im, cfg) == expect);
      CHECK(im.live_jit_indexes().size() == cfg.capacity);
    }
  }

  SECTION("conventional indexes are never eviction victims") {
    IndexManager im;
    im.build_index(cat, "T", {"C0"}, IndexMode::real, IndexKind::conventional,
                   cfg, 1);
    im.build_index(cat, "T", {"C1"}, IndexMode::real, IndexKind::conventional,
                   cfg, 2);
    for (int i = 2; i < 7; ++i)
      im.build_index(cat, "T", {"C" + std::to_string(i)}, IndexMode::real,
                     IndexKind::jit, cfg, i + 1);
    auto dropped = evict_if_needed(im, cfg);
    CHECK(dropped == std::vector<std::string>{"IDX_T_C2", "IDX_T_C3"});
    CHECK(im.live_jit_indexes().size() == cfg.capacity);
    CHECK(im.descriptor("IDX_T_C0").kind == IndexKind::conventional);
    CHECK(im.descriptor("IDX_T_C1").kind == IndexKind::conventional);
  }

  SECTION("under capacity nothing is dropped") {
    IndexManager im;
    im.build_index(cat, "T", {"C0"}, IndexMode::real, IndexKind::jit, cfg, 1);
    CHECK(evict_if_needed(im, cfg).empty());
    CHECK(im.live_jit_indexes().size() == 1);
  }
}

TEST_CASE("path names render stably", "[jit]") {
  CHECK(std::string(jit_path_name(JitPath::below_threshold)) == "below-threshold");
  CHECK(std::string(jit_path_name(JitPath::scanner_hit)) == "scanner-hit");
  CHECK(std::string(jit_path_name(JitPath::index_created)) == "index-created");
  CHECK(std::string(jit_path_name(JitPath::index_rejected)) == "index-rejected");
}
