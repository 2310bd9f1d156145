#include "vbid/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <fmt/format.h>
#include <fmt/os.h>

#include "vbid/parallel.hpp"

namespace vbid {

std::mt19937_64 keyed_engine(std::uint64_t seed, std::uint64_t replication, std::uint64_t day) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32),
                    static_cast<std::uint32_t>(day), static_cast<std::uint32_t>(day >> 32)};
  return std::mt19937_64(seq);
}

MarketDay sample_day(const DistributionSpec& spec, std::mt19937_64& rng) {
  MarketDay day;
  if (const auto* d = std::get_if<BernoulliFamily>(&spec)) {
    std::uniform_real_distribution<double> da((1.0 - d->epsilon) / 2.0, (1.0 + d->epsilon) / 2.0);
    std::bernoulli_distribution rt(d->pi_bar);
    day.da.push_back(da(rng));
    day.rt.push_back(rt(rng) ? 1.0 : 0.0);
    return day;
  }
  const auto& f = std::get<UniformSpreadFamily>(spec);
  const std::size_t K = f.da_high.size();
  day.da.resize(K);
  day.rt.resize(K);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  for (std::size_t k = 0; k < K; ++k) {
    day.da[k] = f.da_high[k] * unit(rng);
    // Uniform on mean +- sd*sqrt(3) has standard deviation sd.
    day.rt[k] = day.da[k] + f.spread_mean[k] + f.spread_sd[k] * std::sqrt(3.0) * sym(rng);
  }
  return day;
}

MarketDay sample_day(const PriceModel& model, std::uint64_t replication, std::uint64_t day) {
  auto rng = keyed_engine(model.seed, replication, day);
  return sample_day(model.spec, rng);
}

LowerBoundFamily lower_bound_family(std::size_t horizon) {
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  const double eps = 1.0 / (std::sqrt(static_cast<double>(horizon)) * 2.0 * std::sqrt(5.0));
  return {BernoulliFamily{0.5 - eps, eps, 1.0}, BernoulliFamily{0.5 + eps, eps, 1.0}, eps};
}

double lower_bound_value(std::size_t horizon) {
  return std::sqrt(static_cast<double>(horizon)) / (16.0 * std::sqrt(5.0));
}

RegretTrajectory run_experiment(const PolicyFactory& factory, const DistributionSpec& spec,
                                const ExperimentConfig& cfg) {
  if (cfg.horizon < 1 || cfg.replications < 1) throw std::invalid_argument("horizon and replications must be positive");
  const double optimum =
      cfg.reference_value ? *cfg.reference_value : analytic_optimum(spec, cfg.rho).value;
  const std::size_t K = option_count(spec);
  const double budget = budget_of(spec);
  const PriceModel model{spec, cfg.seed};

  std::vector<std::vector<double>> per_rep(cfg.replications);
  std::vector<std::string> names(cfg.replications);
  parallel_for(cfg.replications, cfg.threads, [&](std::size_t rep) {
    auto policy = factory(K, budget);
    names[rep] = policy->name();
    auto& regret = per_rep[rep];
    regret.resize(cfg.horizon);
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
      const BidVector bid = policy->next_bid();
      regret[t] = optimum - expected_objective(spec, bid.x, cfg.rho);
      policy->observe(sample_day(model, rep, t + 1));
    }
  });

  RegretTrajectory out;
  out.policy = names.front();
  out.replications = cfg.replications;
  out.optimum_value = optimum;
  out.mean_incremental.assign(cfg.horizon, 0.0);
  out.cumulative.assign(cfg.horizon, 0.0);
  out.stderr_incremental.assign(cfg.horizon, 0.0);
  const double n = static_cast<double>(cfg.replications);
  double running = 0.0;
  for (std::size_t t = 0; t < cfg.horizon; ++t) {
    double sum = 0.0;
    for (const auto& r : per_rep) sum += r[t];
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& r : per_rep) ss += (r[t] - mean) * (r[t] - mean);
    out.mean_incremental[t] = mean;
    out.stderr_incremental[t] = cfg.replications > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
    running += mean;
    out.cumulative[t] = running;
  }
  return out;
}

double SlopeCheck::spread() const {
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  if (*hi <= 0.0) return 1.0;
  if (*lo <= 0.0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

SlopeCheck slope_check(const RegretTrajectory& trajectory, std::vector<std::size_t> horizons) {
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  if (horizons.size() < 3) throw RefusalError("slope check needs at least three distinct horizons");
  if (horizons.front() < 2) throw RefusalError("slope check horizons must be at least 2");
  if (horizons.back() < 10 * horizons.front()) throw RefusalError("slope check horizons must span a decade");
  if (horizons.back() > trajectory.horizon()) throw RefusalError("slope check horizon exceeds the trajectory");
  SlopeCheck out;
  out.horizons = horizons;
  for (std::size_t T : horizons) {
    const double t = static_cast<double>(T);
    out.ratios.push_back(trajectory.cumulative[T - 1] / std::sqrt(t * std::log(t)));
  }
  return out;
}

void write_regret_csv(const RegretTrajectory& trajectory, const std::string& path) {
  auto file = fmt::output_file(path);
  file.print("day,mean_incremental_regret,cumulative_regret,stderr\n");
  for (std::size_t t = 0; t < trajectory.horizon(); ++t) {
    file.print("{},{},{},{}\n", t + 1, trajectory.mean_incremental[t], trajectory.cumulative[t],
               trajectory.stderr_incremental[t]);
  }
}

}  // namespace vbid
