#pragma once

// Randomised self-checks against the exact oracles, and DP timing.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vbid/dpds.hpp"
#include "vbid/payoff_stats.hpp"

namespace vbid {

/// A random observation stream for one option.
struct Observation {
  double da = 0.0;
  double rt = 0.0;
};

struct TableGenerator {
  double budget = 1.0;
  std::size_t grid = 4;          // DA prices are snapped to this grid with probability `on_grid`
  double on_grid = 0.3;
  double max_price_factor = 1.2; // DA prices drawn from (0, factor * budget]
  double spread = 1.0;           // payoffs uniform in [-spread, spread]
};

std::vector<Observation> random_stream(std::mt19937_64& rng, std::size_t days, const TableGenerator& gen);

/// K tables fed with independent streams of the same length.
std::vector<BreakpointTable> random_tables(std::mt19937_64& rng, std::size_t options, std::size_t days,
                                           const TableGenerator& gen);

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  bool passed() const { return failures == 0 && cases > 0; }
};

struct VerifyOptions {
  bool quick = false;
  std::uint64_t seed = 2024;
  /// Fault injection for the tie-rule suite.
  TieRule tie_rule = TieRule::SmallestBid;
};

std::vector<SuiteResult> run_verify(const VerifyOptions& options);

struct BenchRow {
  std::size_t options = 0;
  std::size_t days = 0;
  std::size_t grid = 0;
  double seconds = 0.0;  // median per solve
};

/// Median over `runs` of the per-solve DP time on random tables whose
/// breakpoints span the whole budget (so no stage is truncated by freezing).
BenchRow bench_solve(std::size_t options, std::size_t days, std::size_t grid, std::size_t runs = 5,
                     std::uint64_t seed = 99);

}  // namespace vbid
