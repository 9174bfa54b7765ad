#include "catch_amalgamated.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"
#include "jitdb/dataset.hpp"

using namespace jitdb;

TEST_CASE("dataset creates the five subject tables with the full schema",
          "[dataset]") {
  Catalog cat;
  DatasetSpec spec;
  spec.rows = 200;
  generate_dataset(cat, spec);

  REQUIRE(dataset_table_names().size() == 5);
  for (const auto& name : dataset_table_names()) {
    REQUIRE(cat.has_table(name));
    const Table& t = cat.table(name);
    CHECK(t.row_count() == 200);
    const auto& cols = t.schema().columns;
    REQUIRE(cols.size() == 69);
    CHECK(cols[0].name == "P_ID");
    CHECK(cols[1].name == "FIRST_NAME");
    CHECK(cols[1].type == ColumnType::text);
    CHECK(cols[2].name == "M1");
    CHECK(cols[66].name == "M65");
    CHECK(cols[67].name == "TOTAL");
    CHECK(cols[68].name == "RANK");
  }
}

TEST_CASE("generation is deterministic for a given spec", "[dataset]") {
  DatasetSpec spec;
  spec.rows = 300;
  Catalog a, b;
  generate_dataset(a, spec);
  generate_dataset(b, spec);

  for (const auto& name : dataset_table_names()) {
    const Table& ta = a.table(name);
    const Table& tb = b.table(name);
    REQUIRE(ta.row_count() == tb.row_count());
    for (RowId r = 0; r < ta.row_count(); ++r)
      REQUIRE(ta.row(r) == tb.row(r));
  }

  Catalog c;
  DatasetSpec reseeded = spec;
  reseeded.seed = 43;
  generate_dataset(c, reseeded);
  bool differs = false;
  const Table& ta = a.table("PHYSICSMARKS");
  const Table& tc = c.table("PHYSICSMARKS");
  for (RowId r = 0; r < ta.row_count() && !differs; ++r)
    if (as_int(ta.value(r, 2)) != as_int(tc.value(r, 2))) differs = true;
  CHECK(differs);
}

TEST_CASE("tables carry independent mark streams", "[dataset]") {
  Catalog cat;
  DatasetSpec spec;
  spec.rows = 300;
  generate_dataset(cat, spec);
  const Table& phys = cat.table("PHYSICSMARKS");
  const Table& chem = cat.table("CHEMISTRYMARKS");
  bool differs = false;
  for (RowId r = 0; r < phys.row_count() && !differs; ++r)
    if (as_int(phys.value(r, 2)) != as_int(chem.value(r, 2))) differs = true;
  CHECK(differs);
}

TEST_CASE("row-level invariants hold across the dataset", "[dataset]") {
  Catalog cat;
  DatasetSpec spec;
  spec.rows = 500;
  generate_dataset(cat, spec);

  for (const auto& name : dataset_table_names()) {
    const Table& t = cat.table(name);
    std::set<std::int64_t> pids;
    std::map<std::int64_t, std::int64_t> rank_of_total;
    std::set<std::int64_t> ranks;
    std::int64_t best_total = -1;

    for (RowId r = 0; r < t.row_count(); ++r) {
      const std::int64_t pid = as_int(t.value(r, 0));
      REQUIRE(pid == static_cast<std::int64_t>(r) + 1);
      pids.insert(pid);
      REQUIRE(as_text(t.value(r, 1)) == "STUDENT_" + std::to_string(pid));

      std::int64_t sum = 0;
      for (std::size_t m = 0; m < kMarkColumns; ++m) {
        const std::int64_t mark = as_int(t.value(r, 2 + m));
        REQUIRE(mark >= 0);
        REQUIRE(mark <= 4);
        sum += mark;
      }
      const std::int64_t total = as_int(t.value(r, 67));
      REQUIRE(total == sum);
      best_total = std::max(best_total, total);

      const std::int64_t rank = as_int(t.value(r, 68));
      ranks.insert(rank);
      auto [it, fresh] = rank_of_total.emplace(total, rank);
      REQUIRE(it->second == rank);  // equal totals share a rank
    }
    CHECK(pids.size() == t.row_count());

    // dense ranking: ranks are exactly 1..#distinct totals, rank 1 is the
    // best total, and a higher total never ranks worse
    REQUIRE(ranks.size() == rank_of_total.size());
    CHECK(*ranks.begin() == 1);
    CHECK(*ranks.rbegin() == static_cast<std::int64_t>(ranks.size()));
    CHECK(rank_of_total.at(best_total) == 1);
    std::int64_t prev_rank = -1;
    for (auto it = rank_of_total.rbegin(); it != rank_of_total.rend(); ++it) {
      if (prev_rank >= 0) CHECK(it->second == prev_rank + 1);
      prev_rank = it->second;
    }
  }
}

TEST_CASE("statistics are refreshed after generation", "[dataset]") {
  Catalog cat;
  DatasetSpec spec;
  spec.rows = 2000;
  generate_dataset(cat, spec);
  const Table& t = cat.table("MATHSMARKS");
  const ColumnStats& m1 = t.stats(2);
  CHECK(m1.ndv == 5);
  CHECK(m1.min_val == 0);
  CHECK(m1.max_val == 4);
  const ColumnStats& pid = t.stats(0);
  CHECK(pid.min_val == 1);
  CHECK(pid.max_val == 2000);
}

TEST_CASE("existing tables are protected unless overwrite is set", "[dataset]") {
  Catalog cat;
  DatasetSpec spec;
  spec.rows = 50;
  generate_dataset(cat, spec);

  try {
    generate_dataset(cat, spec);
    FAIL("must refuse to clobber");
  } catch (const Error& e) {
    CHECK(e.code() == errc::tables_exist);
  }

  DatasetSpec redo = spec;
  redo.rows = 80;
  redo.overwrite = true;
  generate_dataset(cat, redo);
  CHECK(cat.table("PHYSICSMARKS").row_count() == 80);
}
