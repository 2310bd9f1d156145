#include "vbid/dpds.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace vbid {

GridSchedule GridSchedule::days_minus_one() {
  GridSchedule s;
  s.override_fn = [](std::size_t t) { return t > 0 ? t - 1 : 0; };
  return s;
}

std::size_t grid_size(std::size_t t, const GridSchedule& schedule) {
  if (t < 1) throw std::invalid_argument("grid_size needs t >= 1");
  std::size_t raw = 0;
  if (schedule.override_fn) {
    raw = schedule.override_fn(t);
  } else {
    if (!(schedule.alpha > 0.0)) throw std::invalid_argument("grid schedule needs alpha > 0");
    if (schedule.gamma < 0.5) {
      static bool warned = false;
      if (!warned) {
        spdlog::warn("grid exponent gamma={} < 1/2: the regret guarantee does not apply", schedule.gamma);
        warned = true;
      }
    }
    raw = static_cast<std::size_t>(std::ceil(schedule.alpha * std::pow(static_cast<double>(t), schedule.gamma)));
  }
  return std::max<std::size_t>(raw, 2);
}

StagePayoffs stage_payoffs(const BreakpointTable& table, double budget, std::size_t grid, double rho) {
  const auto lambda = table.breakpoints();
  StagePayoffs out;
  out.value.resize(grid + 1);
  out.freeze = grid;
  const double top = lambda.back();
  std::size_t l = 0;
  bool frozen = false;
  for (std::size_t j = 0; j <= grid; ++j) {
    const double x = grid_point(j, budget, grid);
    while (l + 1 < lambda.size() && lambda[l + 1] <= x) ++l;
    out.value[j] = table.objective_at(l, rho);
    if (!frozen && x >= top) {
      out.freeze = j;
      frozen = true;
    }
  }
  return out;
}

DpSolution solve(std::span<const BreakpointTable> tables, double budget, std::size_t grid, double rho,
                 TieRule tie) {
  if (grid < 2) throw std::invalid_argument("grid size must be at least 2");
  if (rho < 0.0) throw std::domain_error("risk weight rho must be nonnegative");
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  if (tables.empty()) throw StructuralError("solve needs at least one option");
  const std::size_t days = tables.front().days();
  if (days < 1) throw StructuralError("solve needs at least one observed day");
  for (const auto& t : tables) {
    if (t.days() != days) throw StructuralError("breakpoint tables disagree on the number of observed days");
  }

  const std::size_t K = tables.size();
  const std::size_t width = grid + 1;
  DpSolution sol;
  sol.grid = grid;
  sol.options = K;
  sol.value_table.assign((K + 1) * width, 0.0);
  sol.choice_table.assign(K * width, 0);

  for (std::size_t n = 1; n <= K; ++n) {
    const StagePayoffs stage = stage_payoffs(tables[n - 1], budget, grid, rho);
    const double* prev = &sol.value_table[(n - 1) * width];
    double* cur = &sol.value_table[n * width];
    std::size_t* choice = &sol.choice_table[(n - 1) * width];
    for (std::size_t j = 0; j <= grid; ++j) {
      double best = prev[j];
      std::size_t arg = 0;
      const std::size_t last = std::min(j, stage.freeze);
      for (std::size_t i = 1; i <= last; ++i) {
        const double cand = prev[j - i] + stage.value[i];
        if (tie == TieRule::SmallestBid ? best < cand : best <= cand) {
          best = cand;
          arg = i;
        }
      }
      cur[j] = best;
      choice[j] = arg;
    }
  }

  sol.value = sol.value_table[K * width + grid];
  sol.grid_bid.assign(K, 0);
  sol.bid = BidVector::zeros(K, budget);
  std::size_t remaining = grid;
  for (std::size_t n = K; n >= 1; --n) {
    const std::size_t i = sol.w(n, remaining);
    sol.grid_bid[n - 1] = i;
    sol.bid.x[n - 1] = grid_point(i, budget, grid);
    remaining -= i;
  }
  return sol;
}

DpdsPolicy::DpdsPolicy(std::size_t options, double budget, DpdsConfig config)
    : tables_(options), budget_(budget), config_(std::move(config)) {
  if (!(budget > 0.0)) throw std::invalid_argument("budget must be positive");
  if (config_.rho < 0.0) throw std::domain_error("risk weight rho must be nonnegative");
}

std::string DpdsPolicy::name() const { return fmt::format("dpds({})", config_.rho); }

void DpdsPolicy::observe(const MarketDay& day) {
  validate(day);
  if (day.size() != tables_.size()) {
    throw StructuralError(
        fmt::format("observation has {} options, policy was built for {}", day.size(), tables_.size()));
  }
  for (std::size_t k = 0; k < tables_.size(); ++k) tables_[k].update(day.da[k], day.rt[k]);
  ++days_;
}

BidVector DpdsPolicy::next_bid() {
  if (days_ == 0) return BidVector::zeros(tables_.size(), budget_);
  last_ = solve(tables_, budget_, grid_size(days_, config_.schedule), config_.rho);
  return last_->bid;
}

BidVector DpdsPolicy::next_bid(std::span<const MarketDay> new_days) {
  for (const auto& d : new_days) observe(d);
  return next_bid();
}

}  // namespace vbid
