#pragma once

#include <cstdint>

#include "jitdb/common.hpp"

namespace jitdb {

enum class ThresholdMode { static_mode, dynamic_mode };

/// How candidate columns are ranked by observed usage frequency. The
/// default ranks busiest columns first; the ascending variant is kept as a
/// switch for comparison runs.
enum class FrequencyRank { descending, ascending };

/// Engine tuning knobs. One struct covers both the cost model constants and
/// the adaptive-indexing bounds so a single object configures an Engine.
struct Config {
  // --- adaptive indexing ---
  bool jit_enabled = true;
  ThresholdMode threshold_mode = ThresholdMode::static_mode;
  /// Static trigger threshold (units of normalized cost).
  std::int64_t static_threshold = 2;
  /// Page count that maps to one unit of normalized cost.
  double norm_unit = 1000.0;
  /// Maximum number of live JIT indexes before ageing kicks in.
  std::size_t capacity = 8;
  /// Frequency-rank cutoff: at most this many candidate columns survive the
  /// usage ranking step.
  std::size_t rank_cutoff_p = 8;
  /// Uniqueness cutoff: at most this many columns survive the uniqueness
  /// ranking step.
  std::size_t unique_cutoff_m = 6;
  /// Maximum number of columns in a composite candidate.
  std::size_t max_width_mprime = 3;
  /// Number of candidates advanced to the hypothetical costing stage.
  std::size_t advance_tprime = 4;
  FrequencyRank frequency_rank = FrequencyRank::descending;
  /// A built index is assumed to pay for itself over this many queries.
  double expected_reuse = 3.0;
  /// Updates per query used when charging index maintenance (0 = read-only
  /// workload).
  double update_rate = 0.0;

  // --- cost model ---
  std::uint64_t page_size = 8192;
  std::uint64_t fan_out = 256;
  /// Page fraction charged per fetched row when following an index into the
  /// base table.
  double fetch_factor = 1.0;

  void validate() const {
    if (page_size == 0) fail(errc::invalid_config, "page_size must be positive");
    if (fan_out < 2) fail(errc::invalid_config, "fan_out must be at least 2");
    if (norm_unit <= 0.0) fail(errc::invalid_config, "norm_unit must be positive");
    if (static_threshold < 0)
      fail(errc::invalid_config, "threshold must be non-negative");
    if (capacity == 0) fail(errc::invalid_config, "capacity must be positive");
    if (rank_cutoff_p == 0 || unique_cutoff_m == 0 || max_width_mprime == 0 ||
        advance_tprime == 0)
      fail(errc::invalid_config, "candidate bounds must be positive");
    if (unique_cutoff_m > rank_cutoff_p)
      fail(errc::invalid_config, "unique cutoff cannot exceed rank cutoff");
    if (max_width_mprime > unique_cutoff_m)
      fail(errc::invalid_config, "composite width cannot exceed unique cutoff");
    if (expected_reuse <= 0.0)
      fail(errc::invalid_config, "expected_reuse must be positive");
    if (update_rate < 0.0)
      fail(errc::invalid_config, "update_rate must be non-negative");
    if (fetch_factor < 0.0)
      fail(errc::invalid_config, "fetch_factor must be non-negative");
  }
};

}  // namespace jitdb
