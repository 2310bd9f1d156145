#pragma once

// Dynamic programming on a discrete budget grid.
//
// With grid size a, every option's bid is restricted to {0, B/a, ..., B} and the
// bid vector must spend at most a grid steps in total. The K-stage Bellman
// recursion
//   V_n(j) = max_{0 <= i <= j} V_{n-1}(j - i) + g_n(i)
// over integer grid indices is exact on that grid; g_n(i) is the sample
// mean-variance objective of option n at bid i*B/a.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "vbid/payoff_stats.hpp"
#include "vbid/policy.hpp"

namespace vbid {

/// Grid size schedule: max(ceil(alpha * t^gamma), 2), or a fixed override.
struct GridSchedule {
  double alpha = 1.0;
  double gamma = 0.5;
  std::function<std::size_t(std::size_t)> override_fn;

  /// The schedule used in the historical experiments: t - 1 (floored at 2).
  static GridSchedule days_minus_one();
};

/// Grid size after t >= 1 observed days. gamma < 1/2 is allowed but logged.
std::size_t grid_size(std::size_t t, const GridSchedule& schedule);

/// Bid value of grid index j. Every caller materialises grid bids through
/// this so all evaluation paths see identical doubles.
inline double grid_point(std::size_t j, double budget, std::size_t grid) {
  return static_cast<double>(j) * budget / static_cast<double>(grid);
}

/// Which maximiser a stage keeps when two stage bids give equal value.
enum class TieRule {
  SmallestBid,  // strict improvement only
  LargestBid,   // for fault-injection checks
};

/// Objective of one option at every grid point, plus the freeze index: the
/// smallest grid index whose bid clears every observed DA price (grid size if
/// none does). Bids above the freeze index cost budget without changing payoff.
struct StagePayoffs {
  std::vector<double> value;
  std::size_t freeze = 0;
};

/// Single merged sweep over the breakpoints and the grid, O(t + grid).
StagePayoffs stage_payoffs(const BreakpointTable& table, double budget, std::size_t grid, double rho);

struct DpSolution {
  BidVector bid;
  std::vector<std::size_t> grid_bid;  // bid[k] == grid_point(grid_bid[k], ...)
  double value = 0.0;
  std::size_t grid = 0;
  std::size_t options = 0;

  /// V_n(j) for n in 0..K, j in 0..grid (row-major).
  std::vector<double> value_table;
  /// Chosen stage bid index w_n(j) for n in 1..K (row n-1).
  std::vector<std::size_t> choice_table;

  double V(std::size_t n, std::size_t j) const { return value_table[n * (grid + 1) + j]; }
  std::size_t w(std::size_t n, std::size_t j) const { return choice_table[(n - 1) * (grid + 1) + j]; }
};

/// Exact maximiser of sum_k mean-variance objective over the grid-restricted
/// budget set. All tables must have the same number of observed days (>= 1).
DpSolution solve(std::span<const BreakpointTable> tables, double budget, std::size_t grid, double rho,
                 TieRule tie = TieRule::SmallestBid);

struct DpdsConfig {
  GridSchedule schedule;
  double rho = 0.0;
};

class DpdsPolicy final : public Policy {
 public:
  DpdsPolicy(std::size_t options, double budget, DpdsConfig config);

  std::string name() const override;
  void observe(const MarketDay& day) override;
  BidVector next_bid() override;

  /// Observe each day in order, then bid.
  BidVector next_bid(std::span<const MarketDay> new_days);

  std::span<const BreakpointTable> tables() const { return tables_; }
  std::size_t observed_days() const { return days_; }
  const std::optional<DpSolution>& last_solution() const { return last_; }

 private:
  std::vector<BreakpointTable> tables_;
  double budget_;
  DpdsConfig config_;
  std::size_t days_ = 0;
  std::optional<DpSolution> last_;
};

}  // namespace vbid
