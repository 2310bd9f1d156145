#include "vbid/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "vbid/dpds.hpp"

namespace vbid {

namespace {

constexpr double kEnumerationLimit = 1e7;
constexpr std::size_t kMaxMckpItems = 64;
constexpr double kTieTol = 1e-9;

void check_tables(std::span<const BreakpointTable> tables) {
  if (tables.empty()) throw StructuralError("oracle needs at least one option");
  for (const auto& t : tables) {
    if (t.days() != tables.front().days()) throw StructuralError("breakpoint tables disagree on observed days");
  }
}

}  // namespace

GridOptimum brute_force_grid(std::span<const BreakpointTable> tables, double budget, std::size_t grid, double rho) {
  check_tables(tables);
  if (grid < 1) throw std::invalid_argument("grid size must be positive");
  const std::size_t K = tables.size();
  if (std::pow(static_cast<double>(grid + 1), static_cast<double>(K)) > kEnumerationLimit) {
    throw RefusalError(fmt::format("grid enumeration of {}^{} points exceeds the 1e7 guard", grid + 1, K));
  }

  // Per-option objective on the grid, by direct step-function lookup.
  std::vector<std::vector<double>> payoff(K, std::vector<double>(grid + 1));
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t j = 0; j <= grid; ++j) {
      payoff[k][j] = tables[k].mean_var_payoff(grid_point(j, budget, grid), rho);
    }
  }

  GridOptimum best;
  best.grid_bid.assign(K, 0);
  best.value = 0.0;
  for (std::size_t k = 0; k < K; ++k) best.value += payoff[k][0];

  std::vector<std::size_t> idx(K, 0);
  while (true) {
    // Lexicographic odometer, last option fastest.
    bool done = true;
    for (std::size_t p = K; p-- > 0;) {
      if (++idx[p] <= grid) {
        done = false;
        break;
      }
      idx[p] = 0;
    }
    if (done) break;
    const std::size_t spent = std::accumulate(idx.begin(), idx.end(), std::size_t{0});
    if (spent > grid) continue;
    double value = 0.0;
    for (std::size_t k = 0; k < K; ++k) value += payoff[k][idx[k]];
    if (best.value < value) {
      best.value = value;
      best.grid_bid = idx;
    }
  }
  best.bid = BidVector::zeros(K, budget);
  for (std::size_t k = 0; k < K; ++k) best.bid.x[k] = grid_point(best.grid_bid[k], budget, grid);
  return best;
}

std::size_t MckpInstance::item_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.size();
  return n;
}

MckpInstance mckp_build(std::span<const BreakpointTable> tables, double budget, double rho) {
  MckpInstance inst;
  inst.capacity = budget;
  for (const auto& t : tables) {
    auto& group = inst.groups.emplace_back();
    const auto lambda = t.breakpoints();
    for (std::size_t j = 1; j < lambda.size(); ++j) group.push_back({lambda[j], t.objective_at(j, rho)});
  }
  return inst;
}

MckpSolution mckp_solve_exact(const MckpInstance& instance) {
  if (instance.item_count() > kMaxMckpItems) {
    throw RefusalError(fmt::format("knapsack instance has {} items, exact solver accepts at most {}",
                                   instance.item_count(), kMaxMckpItems));
  }
  const std::size_t G = instance.groups.size();

  // Items visited in ascending weight so the first optimum found is the smallest bid.
  std::vector<std::vector<std::size_t>> order(G);
  for (std::size_t g = 0; g < G; ++g) {
    order[g].resize(instance.groups[g].size());
    std::iota(order[g].begin(), order[g].end(), 0);
    std::stable_sort(order[g].begin(), order[g].end(), [&](std::size_t a, std::size_t b) {
      return instance.groups[g][a].weight < instance.groups[g][b].weight;
    });
  }

  // Optimistic completion of groups g.. with capacity `room`, ignoring coupling.
  auto bound = [&](std::size_t from, double room) {
    double extra = 0.0;
    for (std::size_t g = from; g < G; ++g) {
      double best = 0.0;
      for (const auto& item : instance.groups[g]) {
        if (item.weight <= room) best = std::max(best, item.value);
      }
      extra += best;
    }
    return extra;
  };

  MckpSolution best;
  best.choice.assign(G, std::nullopt);
  best.value = 0.0;
  bool have_best = false;
  std::vector<std::optional<std::size_t>> current(G);

  std::function<void(std::size_t, double, double)> dfs = [&](std::size_t g, double used, double value) {
    if (g == G) {
      if (!have_best || best.value < value) {
        best.value = value;
        best.choice = current;
        have_best = true;
      }
      return;
    }
    if (have_best && value + bound(g, instance.capacity - used) < best.value - kTieTol) return;
    current[g] = std::nullopt;
    dfs(g + 1, used, value);
    for (std::size_t i : order[g]) {
      const auto& item = instance.groups[g][i];
      if (used + item.weight > instance.capacity) break;
      current[g] = i;
      dfs(g + 1, used + item.weight, value + item.value);
    }
    current[g] = std::nullopt;
  };
  dfs(0, 0.0, 0.0);

  best.bid.assign(G, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    if (best.choice[g]) best.bid[g] = instance.groups[g][*best.choice[g]].weight;
  }
  return best;
}

ErmOptimum erm_optimum_by_enumeration(std::span<const BreakpointTable> tables, double budget, double rho) {
  check_tables(tables);
  const std::size_t K = tables.size();
  double combos = 1.0;
  for (const auto& t : tables) combos *= static_cast<double>(t.breakpoints().size());
  if (combos > kEnumerationLimit) throw RefusalError("breakpoint enumeration exceeds the 1e7 guard");

  // Candidate bids: 0 and every observed DA price.
  std::vector<std::vector<double>> candidates(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto lambda = tables[k].breakpoints();
    candidates[k].assign(lambda.begin(), lambda.end());
  }

  ErmOptimum best;
  best.bid.assign(K, 0.0);
  best.value = 0.0;
  for (std::size_t k = 0; k < K; ++k) best.value += tables[k].mean_var_payoff(0.0, rho);

  std::vector<double> bid(K, 0.0);
  std::function<void(std::size_t, double, double)> walk = [&](std::size_t k, double used, double value) {
    if (k == K) {
      if (best.value < value) {
        best.value = value;
        best.bid = bid;
      }
      return;
    }
    for (double x : candidates[k]) {
      if (used + x > budget) continue;
      bid[k] = x;
      walk(k + 1, used + x, value + tables[k].mean_var_payoff(x, rho));
    }
    bid[k] = 0.0;
  };
  walk(0, 0.0, 0.0);
  return best;
}

bool erm_equivalence_check(std::span<const BreakpointTable> tables, double budget, double rho) {
  const MckpSolution knapsack = mckp_solve_exact(mckp_build(tables, budget, rho));
  const ErmOptimum erm = erm_optimum_by_enumeration(tables, budget, rho);
  return std::abs(knapsack.value - erm.value) <= kTieTol;
}

// ---------------------------------------------------------------------------
// Closed forms

std::size_t option_count(const DistributionSpec& spec) {
  return std::visit(
      [](const auto& s) -> std::size_t {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, BernoulliFamily>) {
          return 1;
        } else {
          return s.da_high.size();
        }
      },
      spec);
}

double budget_of(const DistributionSpec& spec) {
  return std::visit([](const auto& s) { return s.budget; }, spec);
}

namespace {

struct BernoulliMoments {
  double lo, hi, pi_bar, eps;

  double clamp(double x) const { return std::min(x, hi); }
  // E[nu 1{lambda <= x}]
  double r(double x) const {
    if (x < lo) return 0.0;
    x = clamp(x);
    return (pi_bar * (x - lo) - (x * x - lo * lo) / 2.0) / eps;
  }
  // E[nu^2 1{lambda <= x}], with pi^2 = pi for a Bernoulli RT price.
  double m2(double x) const {
    if (x < lo) return 0.0;
    x = clamp(x);
    return (pi_bar * (x - lo) - pi_bar * (x * x - lo * lo) + (x * x * x - lo * lo * lo) / 3.0) / eps;
  }
  double objective(double x, double rho) const {
    const double mean = r(x);
    return mean - rho * (m2(x) - mean * mean);
  }
  double slope(double x, double rho) const {
    const double dr = (pi_bar - x) / eps;
    const double dm2 = (pi_bar - 2.0 * pi_bar * x + x * x) / eps;
    return dr - rho * (dm2 - 2.0 * r(x) * dr);
  }
};

BernoulliMoments moments_of(const BernoulliFamily& f) {
  if (!(f.epsilon > 0.0 && f.epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  return {(1.0 - f.epsilon) / 2.0, (1.0 + f.epsilon) / 2.0, f.pi_bar, f.epsilon};
}

AnalyticOptimum bernoulli_optimum(const BernoulliFamily& f, double rho) {
  const auto m = moments_of(f);
  const double top = std::min(m.hi, f.budget);
  std::vector<double> candidates{0.0};
  if (m.lo <= top) {
    candidates.push_back(m.lo);
    // Interior stationary points of the (cubic) derivative.
    constexpr int kCells = 4096;
    const double h = (top - m.lo) / kCells;
    for (int i = 0; i < kCells; ++i) {
      double a = m.lo + h * i;
      double b = a + h;
      double fa = m.slope(a, rho);
      const double fb = m.slope(b, rho);
      if (fa == 0.0) {
        candidates.push_back(a);
        continue;
      }
      if ((fa > 0.0) == (fb > 0.0)) continue;
      for (int it = 0; it < 200 && b - a > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        const double fm = m.slope(mid, rho);
        if ((fm > 0.0) == (fa > 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      candidates.push_back(0.5 * (a + b));
    }
    candidates.push_back(top);
  }
  std::sort(candidates.begin(), candidates.end());
  AnalyticOptimum best{{0.0}, m.objective(0.0, rho)};
  for (double x : candidates) {
    const double v = m.objective(x, rho);
    if (best.value < v) best = {{x}, v};
  }
  return best;
}

void validate(const UniformSpreadFamily& f) {
  const auto K = f.da_high.size();
  if (K == 0 || f.spread_mean.size() != K || f.spread_sd.size() != K) {
    throw StructuralError("uniform-spread family parameters must be nonempty and equal in length");
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (!(f.da_high[k] > 0.0) || f.spread_sd[k] < 0.0) throw std::invalid_argument("invalid uniform-spread parameter");
  }
}

double uniform_spread_objective(const UniformSpreadFamily& f, std::size_t k, double x, double rho) {
  const double p = std::clamp(x / f.da_high[k], 0.0, 1.0);
  const double m = f.spread_mean[k];
  const double s2 = f.spread_sd[k] * f.spread_sd[k];
  const double mean = m * p;
  const double var = (s2 + m * m) * p - mean * mean;
  return mean - rho * var;
}

// Each option's objective is convex in its bid on [0, da_high] and flat
// beyond, so the maximum over the budget polytope sits on a vertex: every
// option at 0 or da_high except at most one taking the leftover budget.
AnalyticOptimum uniform_spread_optimum(const UniformSpreadFamily& f, double rho) {
  validate(f);
  const std::size_t K = f.da_high.size();
  if (K > 16) throw RefusalError("uniform-spread closed form enumerates vertices; at most 16 options");
  AnalyticOptimum best{std::vector<double>(K, 0.0), 0.0};
  for (std::size_t k = 0; k < K; ++k) best.value += uniform_spread_objective(f, k, 0.0, rho);

  auto consider = [&](const std::vector<double>& x) {
    double v = 0.0;
    for (std::size_t k = 0; k < K; ++k) v += uniform_spread_objective(f, k, x[k], rho);
    if (best.value < v) best = {x, v};
  };

  for (std::uint32_t mask = 0; mask < (1u << K); ++mask) {
    std::vector<double> x(K, 0.0);
    double used = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (mask & (1u << k)) {
        x[k] = f.da_high[k];
        used += x[k];
      }
    }
    if (used > f.budget) continue;
    consider(x);
    const double left = f.budget - used;
    for (std::size_t k = 0; k < K; ++k) {
      if (mask & (1u << k)) continue;
      auto y = x;
      y[k] = std::min(f.da_high[k], left);
      consider(y);
    }
  }
  return best;
}

}  // namespace

OptionMoments option_moments(const DistributionSpec& spec, std::size_t k, double x) {
  if (const auto* d = std::get_if<BernoulliFamily>(&spec)) {
    if (k != 0) throw StructuralError("the lower-bound family has a single option");
    const auto m = moments_of(*d);
    const double mean = m.r(x);
    return {mean, m.m2(x) - mean * mean};
  }
  const auto& f = std::get<UniformSpreadFamily>(spec);
  if (k >= f.da_high.size()) throw StructuralError("option index out of range");
  const double p = std::clamp(x / f.da_high[k], 0.0, 1.0);
  const double m = f.spread_mean[k];
  const double s2 = f.spread_sd[k] * f.spread_sd[k];
  return {m * p, (s2 + m * m) * p - m * m * p * p};
}

double expected_objective(const DistributionSpec& spec, std::span<const double> bid, double rho) {
  if (bid.size() != option_count(spec)) throw StructuralError("bid length does not match the distribution");
  if (const auto* d = std::get_if<BernoulliFamily>(&spec)) return moments_of(*d).objective(bid[0], rho);
  const auto& f = std::get<UniformSpreadFamily>(spec);
  double v = 0.0;
  for (std::size_t k = 0; k < bid.size(); ++k) v += uniform_spread_objective(f, k, bid[k], rho);
  return v;
}

AnalyticOptimum analytic_optimum(const DistributionSpec& spec, double rho) {
  if (rho < 0.0) throw std::domain_error("risk weight rho must be nonnegative");
  if (const auto* d = std::get_if<BernoulliFamily>(&spec)) return bernoulli_optimum(*d, rho);
  return uniform_spread_optimum(std::get<UniformSpreadFamily>(spec), rho);
}

}  // namespace vbid
