#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "jitdb/jitdb.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"jitdb: embedded query engine with adaptive just-in-time indexing"};

  std::string data_dir;
  bool gen = false;
  std::uint64_t rows = 100000;
  std::uint64_t seed = 42;
  std::string jit_mode = "on";
  std::string threshold_mode = "static";
  std::string sql;
  std::string export_dir;
  bool bench = false;
  bool compile_only = false;
  bool force_repl = false;
  std::size_t max_rows = 20;

  jitdb::Config cfg;
  app.add_option("--data-dir", data_dir, "directory to load the catalog from (and save generated data to)");
  app.add_flag("--gen", gen, "generate the exam dataset before anything else");
  app.add_option("--rows", rows, "rows per generated table")->capture_default_str();
  app.add_option("--seed", seed, "generation seed")->capture_default_str();
  app.add_option("--jit", jit_mode, "adaptive indexing on|off")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--threshold", cfg.static_threshold, "static trigger threshold")->capture_default_str();
  app.add_option("--threshold-mode", threshold_mode, "static|dynamic")->check(CLI::IsMember({"static", "dynamic"}));
  app.add_option("--norm-unit", cfg.norm_unit, "pages per normalized cost unit")->capture_default_str();
  app.add_option("--capacity", cfg.capacity, "max live JIT indexes")->capture_default_str();
  app.add_option("--p", cfg.rank_cutoff_p, "frequency-rank cutoff")->capture_default_str();
  app.add_option("--m", cfg.unique_cutoff_m, "uniqueness cutoff")->capture_default_str();
  app.add_option("--mprime", cfg.max_width_mprime, "max candidate index width")->capture_default_str();
  app.add_option("--tprime", cfg.advance_tprime, "candidates advanced to hypothetical costing")->capture_default_str();
  app.add_option("--fetch-factor", cfg.fetch_factor, "row-fetch page weight for index scans")->capture_default_str();
  app.add_option("--sql", sql, "run one query and exit");
  app.add_flag("--bench", bench, "run the standard benchmark table");
  app.add_flag("--compile-only", compile_only, "plan queries without executing them");
  app.add_option("--export-stats", export_dir, "write query history and explain log CSVs here");
  app.add_flag("--repl", force_repl, "drop into the interactive shell");
  app.add_option("--max-rows", max_rows, "rows printed per result")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  cfg.jit_enabled = (jit_mode == "on");
  cfg.threshold_mode = threshold_mode == "dynamic"
                           ? jitdb::ThresholdMode::dynamic_mode
                           : jitdb::ThresholdMode::static_mode;
  try {
    cfg.validate();
  } catch (const jitdb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    jitdb::Engine engine(cfg);

    if (!data_dir.empty() &&
        std::filesystem::exists(std::filesystem::path(data_dir) / "manifest.txt"))
      engine.load(data_dir);

    if (gen) {
      jitdb::DatasetSpec spec;
      spec.rows = rows;
      spec.seed = seed;
      spec.overwrite = true;
      jitdb::generate_dataset(engine.catalog(), spec);
      std::cout << "generated " << jitdb::dataset_table_names().size()
                << " tables x " << spec.rows << " rows (seed " << spec.seed
                << ")\n";
      if (!data_dir.empty()) engine.save(data_dir);
    }

    if (!sql.empty()) {
      jitdb::ExecutionOutcome o = engine.process(sql, !compile_only);
      if (o.executed) jitdb::detail::print_result(o.result, std::cout, max_rows);
      std::cout << "-- rows=" << o.result.row_count() << " cost="
                << static_cast<long long>(std::llround(o.indexed_cost))
                << " A=" << o.normalized << " B=" << o.threshold
                << " path=" << jitdb::jit_path_name(o.path)
                << " index=" << (o.index_used ? *o.index_used : "-") << "\n";
    }

    if (bench) std::cout << jitdb::run_benchmark(engine, false).to_table();

    if (!export_dir.empty()) {
      std::size_t n = engine.export_stats(export_dir);
      std::cout << "exported " << n << " rows to " << export_dir << "\n";
    }

    const bool had_action = gen || bench || !sql.empty() || !export_dir.empty();
    if (force_repl || !had_action) jitdb::repl(engine, std::cin, std::cout);
  } catch (const jitdb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
