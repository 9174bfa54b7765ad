#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "jitdb/bench.hpp"
#include "jitdb/common.hpp"
#include "jitdb/dataset.hpp"
#include "jitdb/engine.hpp"

namespace jitdb {

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline void print_result(const ResultSet& rs, std::ostream& out,
                         std::size_t max_rows) {
  std::string header;
  for (const auto& c : rs.columns) {
    if (!header.empty()) header += " | ";
    header += c;
  }
  out << header << "\n";
  const std::size_t shown = std::min<std::size_t>(rs.row_count(), max_rows);
  for (std::size_t i = 0; i < shown; ++i) {
    Row row = rs.row(i);
    std::string line;
    for (const auto& v : row) {
      if (!line.empty()) line += " | ";
      line += value_to_string(v);
    }
    out << line << "\n";
  }
  if (rs.row_count() > shown)
    out << "... (" << (rs.row_count() - shown) << " more rows)\n";
}

inline const char* repl_usage() {
  return "commands:\n"
         "  <sql>            run a query\n"
         "  \\explain <sql>   show the chosen plan and alternatives\n"
         "  \\indexes         list indexes\n"
         "  \\stats           adaptive-layer counters\n"
         "  \\gen <rows> [seed]  generate the exam dataset (overwrites)\n"
         "  \\jit on|off      toggle adaptive indexing\n"
         "  \\bench           run the standard benchmark (compile-only)\n"
         "  \\q               quit\n";
}

}  // namespace detail

/// Line-oriented shell over one engine. Reads commands from `in`, writes
/// everything to `out`; any error is reported on one line and the loop
/// continues. Returns the number of lines processed.
inline std::size_t repl(Engine& engine, std::istream& in, std::ostream& out,
                        std::size_t max_rows = 20) {
  std::size_t lines = 0;
  std::string line;
  while (out << "jitdb> " << std::flush, std::getline(in, line)) {
    ++lines;
    std::string cmd = detail::trim(line);
    if (cmd.empty()) continue;
    try {
      if (cmd[0] != '\\') {
        ExecutionOutcome o = engine.process(cmd, true);
        detail::print_result(o.result, out, max_rows);
        out << "-- rows=" << o.result.row_count()
            << " cost=" << static_cast<long long>(std::llround(o.indexed_cost))
            << " A=" << o.normalized << " B=" << o.threshold
            << " path=" << jit_path_name(o.path)
            << " index=" << (o.index_used ? *o.index_used : "-") << "\n";
        continue;
      }
      std::istringstream args(cmd.substr(1));
      std::string verb;
      args >> verb;
      if (verb == "q" || verb == "quit" || verb == "exit") {
        break;
      } else if (verb == "explain") {
        std::string sql;
        std::getline(args, sql);
        sql = detail::trim(sql);
        if (sql.empty()) {
          out << "usage: \\explain <sql>\n";
          continue;
        }
        out << format_explain(engine.explain(sql));
      } else if (verb == "indexes") {
        auto list = engine.indexes().list();
        if (list.empty()) out << "(no indexes)\n";
        for (const auto* d : list) {
          std::string cols;
          for (const auto& c : d->columns) {
            if (!cols.empty()) cols += ",";
            cols += c;
          }
          out << d->id << " on " << d->table << "(" << cols << ")"
              << " kind=" << index_kind_name(d->kind)
              << " leaf=" << d->stats.leaf_pages
              << " height=" << d->stats.height
              << " ndv=" << d->stats.key_ndv
              << " size=" << d->stats.size_bytes
              << " last_used=" << d->last_used << "\n";
        }
      } else if (verb == "stats") {
        std::size_t below = 0, hit = 0, created = 0, rejected = 0;
        for (const auto& r : engine.history_rows()) {
          switch (r.path) {
            case JitPath::below_threshold: ++below; break;
            case JitPath::scanner_hit: ++hit; break;
            case JitPath::index_created: ++created; break;
            case JitPath::index_rejected: ++rejected; break;
          }
        }
        out << "queries=" << engine.history().size() << " below=" << below
            << " scanner-hits=" << hit << " created=" << created
            << " rejected=" << rejected
            << " jit_indexes=" << engine.indexes().live_jit_indexes().size()
            << "/" << engine.config().capacity
            << " evictions=" << engine.eviction_log().size() << "\n";
      } else if (verb == "gen") {
        DatasetSpec spec;
        spec.overwrite = true;
        if (!(args >> spec.rows)) {
          out << "usage: \\gen <rows> [seed]\n";
          continue;
        }
        if (std::uint64_t seed; args >> seed) spec.seed = seed;
        generate_dataset(engine.catalog(), spec);
        out << "generated " << dataset_table_names().size() << " tables x "
            << spec.rows << " rows (seed " << spec.seed << ")\n";
      } else if (verb == "jit") {
        std::string mode;
        args >> mode;
        if (mode == "on" || mode == "off") {
          engine.config().jit_enabled = (mode == "on");
          out << "jit " << mode << "\n";
        } else {
          out << "usage: \\jit on|off\n";
        }
      } else if (verb == "bench") {
        out << run_benchmark(engine).to_table();
      } else {
        out << detail::repl_usage();
      }
    } catch (const Error& e) {
      out << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
      out << "error: " << e.what() << "\n";
    }
  }
  return lines;
}

}  // namespace jitdb
