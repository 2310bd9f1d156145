#pragma once

// Exact reference solvers used to check DPDS and the simulator.

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "vbid/market_model.hpp"
#include "vbid/payoff_stats.hpp"

namespace vbid {

// ---------------------------------------------------------------------------
// Grid brute force

struct GridOptimum {
  double value = 0.0;
  std::vector<std::size_t> grid_bid;
  BidVector bid;
};

/// Exhaustive maximum of the summed mean-variance objective over the budget
/// grid. Ties go to the lexicographically smallest grid bid. Refuses when
/// (grid+1)^K exceeds 1e7.
GridOptimum brute_force_grid(std::span<const BreakpointTable> tables, double budget, std::size_t grid, double rho);

// ---------------------------------------------------------------------------
// Multiple-choice knapsack

struct MckpItem {
  double weight = 0.0;
  double value = 0.0;
};

/// One group per option; choosing no item of a group means a zero bid.
struct MckpInstance {
  std::vector<std::vector<MckpItem>> groups;
  double capacity = 0.0;

  std::size_t item_count() const;
};

struct MckpSolution {
  double value = 0.0;
  std::vector<std::optional<std::size_t>> choice;  // per group
  std::vector<double> bid;                         // chosen weight, 0 if none
};

/// Items are the breakpoints of each table: weight = DA price, value = the
/// objective on that step.
MckpInstance mckp_build(std::span<const BreakpointTable> tables, double budget, double rho = 0.0);

/// Depth-first branch and bound. Among equal optima the first in (none, then
/// ascending weight) order per group wins, i.e. the smallest bid. Refuses
/// instances with more than 64 items.
MckpSolution mckp_solve_exact(const MckpInstance& instance);

struct ErmOptimum {
  double value = 0.0;
  std::vector<double> bid;
};

/// Optimum of the unrestricted empirical objective, by enumerating every
/// combination of breakpoint bids and evaluating the step functions directly.
ErmOptimum erm_optimum_by_enumeration(std::span<const BreakpointTable> tables, double budget, double rho = 0.0);

/// True iff the knapsack optimum equals the enumerated ERM optimum (1e-9 abs).
bool erm_equivalence_check(std::span<const BreakpointTable> tables, double budget, double rho = 0.0);

// ---------------------------------------------------------------------------
// Closed-form optima for synthetic markets

/// K = 1: DA price uniform on [(1-eps)/2, (1+eps)/2], RT price Bernoulli(pi_bar).
struct BernoulliFamily {
  double pi_bar = 0.5;
  double epsilon = 0.1;
  double budget = 1.0;
};

/// Per option k: DA price uniform on (0, da_high[k]); spread pi - lambda
/// independent of lambda, uniform with mean spread_mean[k] and standard
/// deviation spread_sd[k].
struct UniformSpreadFamily {
  std::vector<double> da_high;
  std::vector<double> spread_mean;
  std::vector<double> spread_sd;
  double budget = 1.0;
};

using DistributionSpec = std::variant<BernoulliFamily, UniformSpreadFamily>;

std::size_t option_count(const DistributionSpec& spec);
double budget_of(const DistributionSpec& spec);

/// Expected payoff r_k and payoff variance v_k of one option at bid x.
struct OptionMoments {
  double mean = 0.0;
  double variance = 0.0;
};
OptionMoments option_moments(const DistributionSpec& spec, std::size_t k, double x);

/// r^(rho)(x) = sum_k (r_k(x_k) - rho v_k(x_k)).
double expected_objective(const DistributionSpec& spec, std::span<const double> bid, double rho);

struct AnalyticOptimum {
  std::vector<double> bid;
  double value = 0.0;
};

/// argmax of expected_objective over the budget set. Where the maximiser is
/// not unique the smallest bid is returned.
AnalyticOptimum analytic_optimum(const DistributionSpec& spec, double rho);

}  // namespace vbid
