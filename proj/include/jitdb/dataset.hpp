#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "jitdb/catalog.hpp"
#include "jitdb/common.hpp"

namespace jitdb {

/// Shape of the synthetic exam-marks dataset: five subject tables, each with
/// a student id, a name, 65 per-assessment mark columns, their total and a
/// dense rank over totals.
struct DatasetSpec {
  std::uint64_t rows = 100000;
  std::int64_t mark_min = 0;
  std::int64_t mark_max = 4;
  std::uint64_t seed = 42;
  bool overwrite = false;
};

inline const std::vector<std::string>& dataset_table_names() {
  static const std::vector<std::string> names = {
      "PHYSICSMARKS", "CHEMISTRYMARKS", "MATHSMARKS", "BIOLOGYMARKS",
      "ENGLISHMARKS"};
  return names;
}

inline constexpr std::size_t kMarkColumns = 65;

inline TableSchema dataset_schema(const std::string& table_name) {
  TableSchema s;
  s.name = table_name;
  s.columns.push_back({"P_ID", ColumnType::integer});
  s.columns.push_back({"FIRST_NAME", ColumnType::text});
  for (std::size_t i = 1; i <= kMarkColumns; ++i)
    s.columns.push_back({"M" + std::to_string(i), ColumnType::integer});
  s.columns.push_back({"TOTAL", ColumnType::integer});
  s.columns.push_back({"RANK", ColumnType::integer});
  return s;
}

/// Generates the dataset into `catalog`, deterministically for a given spec:
/// the same (rows, seed) always produces byte-identical tables, regardless
/// of platform. Refuses to clobber existing tables unless `overwrite`.
inline void generate_dataset(Catalog& catalog, const DatasetSpec& spec = {}) {
  for (const auto& name : dataset_table_names()) {
    if (!catalog.has_table(name)) continue;
    if (!spec.overwrite)
      fail(errc::tables_exist, name + " already exists (enable overwrite)");
    catalog.drop_table(name);
  }

  for (const auto& table_name : dataset_table_names()) {
    Table& t = catalog.create_table(dataset_schema(table_name));
    // Per-table stream: reseeding by table name keeps every table's content
    // independent of generation order.
    SplitMix64 rng(spec.seed ^ fnv1a64(table_name));

    std::vector<std::int64_t> totals(spec.rows, 0);
    for (std::uint64_t r = 0; r < spec.rows; ++r) {
      const std::int64_t pid = static_cast<std::int64_t>(r) + 1;
      t.append_int_unchecked(0, pid);
      t.append_text_unchecked(1, "STUDENT_" + std::to_string(pid));
      std::int64_t total = 0;
      for (std::size_t m = 0; m < kMarkColumns; ++m) {
        const std::int64_t mark = rng.between(spec.mark_min, spec.mark_max);
        t.append_int_unchecked(2 + m, mark);
        total += mark;
      }
      t.append_int_unchecked(2 + kMarkColumns, total);
      totals[r] = total;
    }

    // Dense rank: highest total is rank 1, equal totals share a rank.
    std::vector<std::int64_t> distinct(totals);
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    std::map<std::int64_t, std::int64_t> rank_of;
    for (std::size_t i = 0; i < distinct.size(); ++i)
      rank_of[distinct[i]] = static_cast<std::int64_t>(i) + 1;
    const std::size_t rank_col = 2 + kMarkColumns + 1;
    for (std::uint64_t r = 0; r < spec.rows; ++r)
      t.append_int_unchecked(rank_col, rank_of[totals[r]]);

    t.set_row_count(spec.rows);
    t.recompute_stats();
  }
}

}  // namespace jitdb
