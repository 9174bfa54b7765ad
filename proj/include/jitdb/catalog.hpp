#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "jitdb/common.hpp"

namespace jitdb {

using Row = std::vector<Value>;

struct ColumnDef {
  std::string name;  // stored uppercase
  ColumnType type = ColumnType::integer;

  bool operator==(const ColumnDef&) const = default;
};

/// Per-column statistics maintained by the catalog. `ndv`, `min_val` and
/// `max_val` are recomputed after every load; `usage_count` only grows as
/// queries reference the column.
struct ColumnStats {
  std::uint64_t ndv = 0;
  std::optional<std::int64_t> min_val;
  std::optional<std::int64_t> max_val;
  std::uint64_t usage_count = 0;

  bool operator==(const ColumnStats&) const = default;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnDef> columns;

  /// Modeled row width: 8 bytes per integer column, 32 per text column.
  std::uint64_t row_width_bytes() const {
    std::uint64_t w = 0;
    for (const auto& c : columns) w += type_width(c.type);
    return w;
  }

  std::optional<std::size_t> column_index(std::string_view col) const {
    std::string u = to_upper(col);
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].name == u) return i;
    return std::nullopt;
  }

  void validate() const {
    if (name.empty()) fail(errc::invalid_schema, "table name must not be empty");
    if (columns.empty())
      fail(errc::invalid_schema, "table " + name + " has no columns");
    std::unordered_set<std::string> seen;
    for (const auto& c : columns) {
      if (c.name.empty())
        fail(errc::invalid_schema, "table " + name + " has an unnamed column");
      if (!seen.insert(c.name).second)
        fail(errc::invalid_schema,
             "table " + name + " repeats column " + c.name);
    }
  }
};

namespace detail {

/// One column of values, stored contiguously. Only the vector matching the
/// declared type is populated.
struct ColumnData {
  ColumnType type = ColumnType::integer;
  std::vector<std::int64_t> ints;
  std::vector<std::string> texts;
  ColumnStats stats;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline void strip_cr(std::string& s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
}

}  // namespace detail

/// A fully materialized table: schema, column-major data, statistics.
class Table {
 public:
  explicit Table(TableSchema schema) : schema_(std::move(schema)) {
    cols_.resize(schema_.columns.size());
    for (std::size_t i = 0; i < cols_.size(); ++i)
      cols_[i].type = schema_.columns[i].type;
  }

  const TableSchema& schema() const { return schema_; }
  const std::string& name() const { return schema_.name; }
  std::uint64_t row_count() const { return rows_; }
  std::uint64_t row_width_bytes() const { return schema_.row_width_bytes(); }
  std::size_t column_count() const { return cols_.size(); }

  const ColumnStats& stats(std::size_t col) const { return cols_[col].stats; }
  ColumnStats& stats(std::size_t col) { return cols_[col].stats; }

  const std::vector<std::int64_t>& ints(std::size_t col) const {
    return cols_[col].ints;
  }
  const std::vector<std::string>& texts(std::size_t col) const {
    return cols_[col].texts;
  }

  Value value(RowId row, std::size_t col) const {
    const auto& c = cols_[col];
    if (c.type == ColumnType::integer) return Value(c.ints[row]);
    return Value(c.texts[row]);
  }

  Row row(RowId r) const {
    Row out;
    out.reserve(cols_.size());
    for (std::size_t c = 0; c < cols_.size(); ++c) out.push_back(value(r, c));
    return out;
  }

  void append_row(const Row& values) {
    if (values.size() != cols_.size())
      fail(errc::value_type_mismatch,
           "row arity " + std::to_string(values.size()) + " does not match " +
               schema_.name);
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      if (cols_[c].type == ColumnType::integer) {
        if (!is_int(values[c]))
          fail(errc::value_type_mismatch,
               "column " + schema_.columns[c].name + " expects an integer");
        cols_[c].ints.push_back(as_int(values[c]));
      } else {
        if (is_int(values[c]))
          fail(errc::value_type_mismatch,
               "column " + schema_.columns[c].name + " expects text");
        cols_[c].texts.push_back(as_text(values[c]));
      }
    }
    ++rows_;
  }

  /// Bulk append used by the dataset generator; no per-value validation.
  void append_int_unchecked(std::size_t col, std::int64_t v) {
    cols_[col].ints.push_back(v);
  }
  void append_text_unchecked(std::size_t col, std::string v) {
    cols_[col].texts.push_back(std::move(v));
  }
  void set_row_count(std::uint64_t n) { rows_ = n; }

  /// Recomputes ndv and min/max for every column; usage counts are kept.
  void recompute_stats() {
    for (auto& c : cols_) {
      if (c.type == ColumnType::integer) {
        std::unordered_set<std::int64_t> seen;
        seen.reserve(c.ints.size() / 4 + 8);
        for (auto v : c.ints) seen.insert(v);
        c.stats.ndv = seen.size();
        if (c.ints.empty()) {
          c.stats.min_val.reset();
          c.stats.max_val.reset();
        } else {
          auto [lo, hi] = std::minmax_element(c.ints.begin(), c.ints.end());
          c.stats.min_val = *lo;
          c.stats.max_val = *hi;
        }
      } else {
        std::unordered_set<std::string_view> seen;
        seen.reserve(c.texts.size() / 4 + 8);
        for (const auto& v : c.texts) seen.insert(v);
        c.stats.ndv = seen.size();
        c.stats.min_val.reset();
        c.stats.max_val.reset();
      }
    }
  }

  void write_csv(std::ostream& out) const {
    for (std::size_t c = 0; c < cols_.size(); ++c) {
      if (c) out << ',';
      out << schema_.columns[c].name;
    }
    out << '\n';
    for (RowId r = 0; r < rows_; ++r) {
      for (std::size_t c = 0; c < cols_.size(); ++c) {
        if (c) out << ',';
        if (cols_[c].type == ColumnType::integer)
          out << cols_[c].ints[r];
        else
          out << cols_[c].texts[r];
      }
      out << '\n';
    }
  }

 private:
  TableSchema schema_;
  std::vector<detail::ColumnData> cols_;
  std::uint64_t rows_ = 0;
};

/// Owns every table. Mutations must be serialized by the caller; concurrent
/// reads of a quiescent catalog are safe.
class Catalog {
 public:
  Table& create_table(TableSchema schema) {
    schema.name = to_upper(schema.name);
    for (auto& c : schema.columns) c.name = to_upper(c.name);
    schema.validate();
    if (tables_.count(schema.name))
      fail(errc::duplicate_table, "table " + schema.name + " already exists");
    auto [it, ok] = tables_.emplace(schema.name, Table(schema));
    return it->second;
  }

  bool has_table(std::string_view name) const {
    return tables_.count(to_upper(name)) != 0;
  }

  const Table& table(std::string_view name) const {
    auto it = tables_.find(to_upper(name));
    if (it == tables_.end())
      fail(errc::unknown_table, "no table named " + to_upper(name));
    return it->second;
  }

  Table& table(std::string_view name) {
    auto it = tables_.find(to_upper(name));
    if (it == tables_.end())
      fail(errc::unknown_table, "no table named " + to_upper(name));
    return it->second;
  }

  void drop_table(std::string_view name) {
    if (tables_.erase(to_upper(name)) == 0)
      fail(errc::unknown_table, "no table named " + to_upper(name));
  }

  std::vector<std::string> table_names() const {
    std::vector<std::string> out;
    out.reserve(tables_.size());
    for (const auto& [name, t] : tables_) out.push_back(name);
    return out;
  }

  std::size_t table_count() const { return tables_.size(); }

  /// Appends the rows of a headered CSV file to an existing table. The
  /// header must list exactly the table's columns, in order. Statistics are
  /// recomputed over the whole table afterwards. Returns rows appended.
  std::uint64_t load_csv(const std::filesystem::path& path,
                         std::string_view table_name) {
    Table& t = table(table_name);
    std::ifstream in(path);
    if (!in) fail(errc::missing_file, "cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line))
      fail(errc::header_mismatch, path.string() + " is empty");
    detail::strip_cr(line);
    auto header = detail::split_csv_line(line);
    const auto& cols = t.schema().columns;
    if (header.size() != cols.size())
      fail(errc::header_mismatch,
           path.string() + " has " + std::to_string(header.size()) +
               " columns, table " + t.name() + " has " +
               std::to_string(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (to_upper(header[i]) != cols[i].name)
        fail(errc::header_mismatch, path.string() + " column " +
                                        std::to_string(i + 1) + " is " +
                                        header[i] + ", expected " +
                                        cols[i].name);

    std::uint64_t appended = 0;
    std::uint64_t row_no = 0;
    while (std::getline(in, line)) {
      detail::strip_cr(line);
      if (line.empty()) continue;
      ++row_no;
      auto fields = detail::split_csv_line(line);
      if (fields.size() != cols.size())
        fail(errc::value_type_mismatch,
             "row " + std::to_string(row_no) + ": expected " +
                 std::to_string(cols.size()) + " values, got " +
                 std::to_string(fields.size()));
      Row values;
      values.reserve(cols.size());
      for (std::size_t c = 0; c < cols.size(); ++c) {
        if (cols[c].type == ColumnType::integer) {
          std::int64_t v = 0;
          const char* first = fields[c].data();
          const char* last = first + fields[c].size();
          auto [ptr, ec] = std::from_chars(first, last, v);
          if (ec != std::errc() || ptr != last)
            fail(errc::value_type_mismatch,
                 "row " + std::to_string(row_no) + " column " + cols[c].name +
                     ": '" + fields[c] + "' is not an integer");
          values.emplace_back(v);
        } else {
          values.emplace_back(fields[c]);
        }
      }
      t.append_row(values);
      ++appended;
    }
    t.recompute_stats();
    return appended;
  }

  /// Bumps the usage counter of one column by one.
  void bump_usage(std::string_view table_name, std::string_view column) {
    Table& t = table(table_name);
    auto idx = t.schema().column_index(column);
    if (!idx)
      fail(errc::unknown_column,
           to_upper(table_name) + " has no column " + to_upper(column));
    ++t.stats(*idx).usage_count;
  }

  const ColumnStats& column_stats(std::string_view table_name,
                                  std::string_view column) const {
    const Table& t = table(table_name);
    auto idx = t.schema().column_index(column);
    if (!idx)
      fail(errc::unknown_column,
           to_upper(table_name) + " has no column " + to_upper(column));
    return t.stats(*idx);
  }

  /// Saves every table into `dir`: a text manifest, one CSV per table and a
  /// stats CSV. The layout round-trips through load() bit-identically.
  void save(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(errc::io_error, "cannot create " + dir.string());

    std::ofstream manifest(dir / "manifest.txt");
    if (!manifest) fail(errc::io_error, "cannot write manifest in " + dir.string());
    for (const auto& [name, t] : tables_) {
      manifest << "TABLE " << name << ' ';
      const auto& cols = t.schema().columns;
      for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) manifest << ',';
        manifest << cols[i].name << ':' << type_name(cols[i].type);
      }
      manifest << '\n';
    }

    for (const auto& [name, t] : tables_) {
      std::ofstream out(dir / (name + ".csv"));
      if (!out) fail(errc::io_error, "cannot write " + name + ".csv");
      t.write_csv(out);
    }

    std::ofstream stats(dir / "stats.csv");
    if (!stats) fail(errc::io_error, "cannot write stats.csv");
    stats << "TABLE,COLUMN,NDV,MIN,MAX,USAGE_COUNT\n";
    for (const auto& [name, t] : tables_) {
      for (std::size_t c = 0; c < t.column_count(); ++c) {
        const auto& s = t.stats(c);
        stats << name << ',' << t.schema().columns[c].name << ',' << s.ndv
              << ',';
        if (s.min_val) stats << *s.min_val;
        stats << ',';
        if (s.max_val) stats << *s.max_val;
        stats << ',' << s.usage_count << '\n';
      }
    }
  }

  /// Restores a directory written by save(). Existing tables with the same
  /// names are rejected.
  void load(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "manifest.txt");
    if (!manifest)
      fail(errc::missing_file, "no manifest in " + dir.string());

    std::string line;
    std::vector<std::string> loaded;
    while (std::getline(manifest, line)) {
      detail::strip_cr(line);
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string tag, name, cols;
      ls >> tag >> name >> cols;
      if (tag != "TABLE" || name.empty() || cols.empty())
        fail(errc::io_error, "bad manifest line: " + line);
      TableSchema schema;
      schema.name = name;
      for (const auto& spec : detail::split_csv_line(cols)) {
        auto colon = spec.find(':');
        if (colon == std::string::npos)
          fail(errc::io_error, "bad column spec: " + spec);
        ColumnDef def;
        def.name = spec.substr(0, colon);
        std::string ty = spec.substr(colon + 1);
        if (ty == "int")
          def.type = ColumnType::integer;
        else if (ty == "text")
          def.type = ColumnType::text;
        else
          fail(errc::io_error, "bad column type: " + ty);
        schema.columns.push_back(std::move(def));
      }
      create_table(std::move(schema));
      loaded.push_back(name);
    }

    for (const auto& name : loaded) load_csv(dir / (name + ".csv"), name);

    std::ifstream stats(dir / "stats.csv");
    if (!stats) fail(errc::missing_file, "no stats.csv in " + dir.string());
    std::getline(stats, line);  // header
    while (std::getline(stats, line)) {
      detail::strip_cr(line);
      if (line.empty()) continue;
      auto fields = detail::split_csv_line(line);
      if (fields.size() != 6) fail(errc::io_error, "bad stats line: " + line);
      Table& t = table(fields[0]);
      auto idx = t.schema().column_index(fields[1]);
      if (!idx) fail(errc::io_error, "stats for unknown column " + fields[1]);
      ColumnStats& s = t.stats(*idx);
      s.ndv = std::stoull(fields[2]);
      s.min_val = fields[3].empty()
                      ? std::nullopt
                      : std::optional<std::int64_t>(std::stoll(fields[3]));
      s.max_val = fields[4].empty()
                      ? std::nullopt
                      : std::optional<std::int64_t>(std::stoll(fields[4]));
      s.usage_count = std::stoull(fields[5]);
    }
  }

 private:
  std::map<std::string, Table> tables_;
};

}  // namespace jitdb
