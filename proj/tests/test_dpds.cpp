#include <doctest.h>

#include <numeric>
#include <random>

#include "vbid/dpds.hpp"
#include "vbid/verify.hpp"

using namespace vbid;

namespace {

BreakpointTable one_obs(double da, double rt) {
  BreakpointTable t;
  t.update(da, rt);
  return t;
}

// Independent enumeration: every grid allocation, evaluated by binary search.
double enumerate_best(std::span<const BreakpointTable> tables, double budget, std::size_t grid, double rho) {
  const std::size_t K = tables.size();
  std::vector<std::size_t> idx(K, 0);
  double best = -1e300;
  while (true) {
    if (std::accumulate(idx.begin(), idx.end(), std::size_t{0}) <= grid) {
      double v = 0.0;
      for (std::size_t k = 0; k < K; ++k) v += tables[k].mean_var_payoff(grid_point(idx[k], budget, grid), rho);
      best = std::max(best, v);
    }
    std::size_t p = 0;
    while (p < K && ++idx[p] > grid) idx[p++] = 0;
    if (p == K) break;
  }
  return best;
}

}  // namespace

TEST_CASE("grid_size") {
  GridSchedule s{1.0, 0.5, {}};
  CHECK(grid_size(4, s) == 2);
  CHECK(grid_size(1, s) == 2);
  CHECK(grid_size(100, s) == 10);
  CHECK(grid_size(101, s) == 11);
  CHECK(grid_size(10, GridSchedule::days_minus_one()) == 9);
  CHECK(grid_size(2, GridSchedule::days_minus_one()) == 2);
  CHECK_THROWS(grid_size(0, s));
  GridSchedule low{1.0, 0.25, {}};
  CHECK(grid_size(16, low) == 2);  // accepted, with a warning
}

TEST_CASE("solve: two-option example") {
  const BreakpointTable tables[] = {one_obs(0.4, 0.7), one_obs(0.6, 1.1)};
  const auto sol = solve(tables, 1.0, 2, 0.0);
  CHECK(sol.bid.x == std::vector<double>{0.0, 1.0});
  CHECK(sol.value == tables[1].avg_payoff(1.0));
  CHECK(sol.value == doctest::Approx(0.5));
  CHECK(sol.value == enumerate_best(tables, 1.0, 2, 0.0));
  CHECK(sol.V(2, 2) == sol.value);
  CHECK(sol.w(2, 2) == 2);
}

TEST_CASE("solve: losing options are not bid") {
  BreakpointTable a, b;
  a.update(0.2, 0.1);
  a.update(0.5, 0.3);
  b.update(0.3, 0.0);
  b.update(0.9, 0.4);
  const BreakpointTable tables[] = {a, b};
  const auto sol = solve(tables, 1.0, 4, 0.0);
  CHECK(sol.bid.x == std::vector<double>{0.0, 0.0});
  CHECK(sol.value == 0.0);
}

TEST_CASE("solve: single option picks the best grid point") {
  BreakpointTable t;
  t.update(0.3, 0.1);   // -0.2 if cleared
  t.update(0.6, 1.6);   // +1.0 if cleared
  const BreakpointTable tables[] = {t};
  const auto sol = solve(tables, 1.0, 5, 0.0);
  // Grid 0, .2, .4, .6, ...: the step at 0.6 has value (-0.2 + 1.0)/2.
  CHECK(sol.bid.x[0] == doctest::Approx(0.6));
  CHECK(sol.value == t.avg_payoff(0.6));
}

TEST_CASE("solve: structural errors") {
  BreakpointTable a = one_obs(0.1, 0.2), b;
  const BreakpointTable mixed[] = {a, b};
  CHECK_THROWS_AS(solve(mixed, 1.0, 4, 0.0), StructuralError);
  const BreakpointTable empty[] = {b};
  CHECK_THROWS_AS(solve(empty, 1.0, 4, 0.0), StructuralError);
  const BreakpointTable ok[] = {a};
  CHECK_THROWS(solve(ok, 1.0, 1, 0.0));
  CHECK_THROWS(solve(ok, 1.0, 4, -1.0));
}

TEST_CASE("stage_payoffs: sweep matches lookups and freezes above the last breakpoint") {
  BreakpointTable t;
  t.update(0.25, 1.0);
  t.update(0.55, 0.0);
  const auto s = stage_payoffs(t, 1.0, 10, 0.3);
  for (std::size_t j = 0; j <= 10; ++j) CHECK(s.value[j] == t.mean_var_payoff(grid_point(j, 1.0, 10), 0.3));
  CHECK(s.freeze == 6);  // 0.6 is the first grid point >= 0.55
  const auto low_budget = stage_payoffs(t, 0.5, 4, 0.0);
  CHECK(low_budget.freeze == 4);  // nothing on the grid clears 0.55
}

TEST_CASE("property: DP equals exhaustive enumeration; bids are feasible grid points") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> k(1, 3), t(1, 20), g(2, 8);
  std::uniform_real_distribution<double> b(0.5, 4.0);
  const double rhos[] = {0.0, 0.002, 1.0};
  for (int i = 0; i < 300; ++i) {
    TableGenerator gen;
    gen.budget = b(rng);
    gen.grid = g(rng);
    const auto tables = random_tables(rng, k(rng), t(rng), gen);
    const double rho = rhos[i % 3];
    const auto sol = solve(tables, gen.budget, gen.grid, rho);
    CHECK(sol.value == enumerate_best(tables, gen.budget, gen.grid, rho));
    CHECK(sol.bid.feasible());
    CHECK(std::accumulate(sol.grid_bid.begin(), sol.grid_bid.end(), std::size_t{0}) <= gen.grid);
    double v = 0.0;
    for (std::size_t j = 0; j < tables.size(); ++j) {
      CHECK(sol.bid.x[j] == grid_point(sol.grid_bid[j], gen.budget, gen.grid));
      v += tables[j].mean_var_payoff(sol.bid.x[j], rho);
    }
    CHECK(v == sol.value);
  }
}

TEST_CASE("property: value is monotone when budget and grid double together") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::size_t> k(1, 4), t(1, 30), g(2, 10);
  for (int i = 0; i < 200; ++i) {
    TableGenerator gen;
    gen.grid = g(rng);
    gen.max_price_factor = 2.5;
    const auto tables = random_tables(rng, k(rng), t(rng), gen);
    const auto small = solve(tables, 1.0, gen.grid, 0.0);
    const auto big = solve(tables, 2.0, 2 * gen.grid, 0.0);
    CHECK(big.value >= small.value);
  }
}

TEST_CASE("tie rule: smaller stage bids win ties") {
  const BreakpointTable zero[] = {one_obs(0.5, 0.5)};
  CHECK(solve(zero, 1.0, 4, 0.0).bid.x[0] == 0.0);
  CHECK(solve(zero, 1.0, 4, 0.0, TieRule::LargestBid).bid.x[0] > 0.0);

  const auto t = one_obs(0.75, 1.75);
  const BreakpointTable pair[] = {t, t};
  const auto sol = solve(pair, 1.0, 4, 0.0);
  CHECK(sol.bid.x == std::vector<double>{0.75, 0.0});
}

TEST_CASE("DpdsPolicy") {
  DpdsPolicy fresh(3, 10.0, {});
  CHECK(fresh.next_bid().x == std::vector<double>(3, 0.0));

  GridSchedule two;
  two.override_fn = [](std::size_t) { return std::size_t{2}; };
  DpdsPolicy p(1, 10.0, {two, 0.0});
  const MarketDay day{{5.0}, {7.0}};
  const auto bid = p.next_bid(std::span<const MarketDay>(&day, 1));
  CHECK(bid.x == std::vector<double>{5.0});
  CHECK(p.observed_days() == 1);
  CHECK(p.last_solution()->grid == 2);

  CHECK_THROWS_AS(p.observe(MarketDay{{1.0, 2.0}, {1.0, 2.0}}), StructuralError);
  CHECK_THROWS(DpdsPolicy(1, 1.0, {GridSchedule{}, -0.5}));
}

TEST_CASE("DpdsPolicy is deterministic") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<MarketDay> days(30);
  for (auto& d : days) d = MarketDay{{u(rng), u(rng)}, {u(rng), u(rng)}};
  DpdsPolicy a(2, 1.5, {GridSchedule{}, 0.002}), b(2, 1.5, {GridSchedule{}, 0.002});
  for (const auto& d : days) {
    a.observe(d);
    b.observe(d);
    CHECK(a.next_bid().x == b.next_bid().x);
  }
}
