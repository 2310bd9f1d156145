#pragma once

// Synthetic i.i.d. markets and the expected-regret harness.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vbid/market_model.hpp"
#include "vbid/oracle.hpp"
#include "vbid/policy.hpp"

namespace vbid {

struct PriceModel {
  DistributionSpec spec;
  std::uint64_t seed = 0;

  std::size_t options() const { return option_count(spec); }
};

/// Engine keyed by (seed, replication, day): every draw is reproducible on its
/// own, so replications can run in any order on any thread.
std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t replication, std::uint64_t day);

/// One translated market day drawn from `spec`.
MarketDay sample_day(const DistributionSpec& spec, std::mt19937_64& rng);

/// Day `day` of replication `replication`.
MarketDay sample_day(const PriceModel& model, std::uint64_t replication, std::uint64_t day);

struct LowerBoundFamily {
  BernoulliFamily low;   // f1: pi_bar = 1/2 - eps, never bidding is optimal
  BernoulliFamily high;  // f2: pi_bar = 1/2 + eps, bidding above the DA range is optimal
  double epsilon = 0.0;
};

/// The pair of single-option markets with eps = T^{-1/2} / (2 sqrt 5), B = 1.
LowerBoundFamily lower_bound_family(std::size_t horizon);

/// sqrt(T) / (16 sqrt 5).
double lower_bound_value(std::size_t horizon);

struct RegretTrajectory {
  std::string policy;
  std::size_t replications = 0;
  double optimum_value = 0.0;
  std::vector<double> mean_incremental;  // per day, averaged over replications
  std::vector<double> cumulative;        // prefix sums of mean_incremental
  std::vector<double> stderr_incremental;

  std::size_t horizon() const { return mean_incremental.size(); }
};

struct ExperimentConfig {
  std::size_t horizon = 1000;
  std::size_t replications = 50;
  double rho = 0.0;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// Used instead of the closed-form optimum when set.
  std::optional<double> reference_value;
};

/// Runs `replications` independent copies of the policy for `horizon` days.
/// Incremental regret of day t is r(x*) - r(x_t) evaluated in closed form at
/// the submitted bid. Results do not depend on the thread count.
RegretTrajectory run_experiment(const PolicyFactory& factory, const DistributionSpec& spec,
                                const ExperimentConfig& cfg);

struct SlopeCheck {
  std::vector<std::size_t> horizons;
  std::vector<double> ratios;  // R_T / sqrt(T log T)

  /// max/min of the ratios (1 when all are zero, +inf when only some are).
  double spread() const;
  bool bounded(double limit = 3.0) const { return spread() <= limit; }
};

/// Requires at least three horizons within the trajectory spanning a decade.
SlopeCheck slope_check(const RegretTrajectory& trajectory, std::vector<std::size_t> horizons);

/// CSV with header day,mean_incremental_regret,cumulative_regret,stderr.
void write_regret_csv(const RegretTrajectory& trajectory, const std::string& path);

}  // namespace vbid
