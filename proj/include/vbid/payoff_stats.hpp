#pragma once

// Incrementally maintained empirical payoff function of one trading option.
//
// After t observations (lambda_i, pi_i) the average payoff of bidding x is
//   rbar(x) = (1/t) sum_i (pi_i - lambda_i) 1{x >= lambda_i},
// a right-continuous step function whose breakpoints are the observed DA
// prices. The table stores the sorted breakpoints together with rbar and the
// average squared payoff vbar evaluated at each breakpoint, so both are
// available in O(log t) and updated in O(t) per observation.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace vbid {

/// Support [l, u] of per-option payoffs; 0 must be inside since a zero bid pays 0.
struct PayoffBounds {
  double l = 0.0;
  double u = 0.0;
};

class BreakpointTable {
 public:
  BreakpointTable();

  /// Record one day's translated (DA, RT) pair.
  void update(double da, double rt);

  /// Number of observed days.
  std::size_t days() const { return days_; }

  std::span<const double> breakpoints() const { return lambda_; }
  std::span<const double> avg_payoffs() const { return r_; }
  std::span<const double> avg_sq_payoffs() const { return v_; }

  /// Index of the step containing x: max{ j : breakpoint[j] <= x }.
  std::size_t segment(double x) const;

  /// rbar(x). Returns 0 before any observation.
  double avg_payoff(double x) const;

  /// Average squared payoff (1/t) sum nu_i^2 1{x >= lambda_i}.
  double avg_sq_payoff(double x) const;

  /// Sample mean-variance objective rbar + rho * t/(t-1) * (rbar^2 - vbar).
  /// The variance term is 0 while t < 2. Throws std::domain_error for rho < 0.
  double mean_var_payoff(double x, double rho) const;

  /// Mean-variance objective on the j-th step. Shared by every evaluation
  /// path so results agree bitwise.
  double objective_at(std::size_t j, double rho) const;

  /// Checks sortedness, lengths and the zero-bid sentinel.
  bool consistent() const;

  /// Every stored average lies inside the payoff support.
  bool within(const PayoffBounds& bounds, double tol = 1e-9) const;

  nlohmann::json to_json() const;
  static BreakpointTable from_json(const nlohmann::json& j);

  bool operator==(const BreakpointTable&) const = default;

 private:
  std::vector<double> lambda_;
  std::vector<double> r_;
  std::vector<double> v_;
  std::size_t days_ = 0;
};

/// Versioned snapshot of a set of tables (one per option).
nlohmann::json snapshot_tables(std::span<const BreakpointTable> tables);
std::vector<BreakpointTable> restore_tables(const nlohmann::json& snapshot);

}  // namespace vbid
