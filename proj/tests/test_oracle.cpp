#include <doctest.h>

#include <cmath>
#include <random>

#include "vbid/oracle.hpp"
#include "vbid/simulator.hpp"
#include "vbid/verify.hpp"

using namespace vbid;

TEST_CASE("brute_force_grid: small example") {
  BreakpointTable a, b;
  a.update(0.4, 0.7);
  b.update(0.6, 1.1);
  const BreakpointTable tables[] = {a, b};
  const auto opt = brute_force_grid(tables, 1.0, 2, 0.0);
  CHECK(opt.grid_bid == std::vector<std::size_t>{0, 2});
  CHECK(opt.value == doctest::Approx(0.5));
  CHECK(opt.bid.x == std::vector<double>{0.0, 1.0});
}

TEST_CASE("brute_force_grid refuses oversized instances") {
  std::vector<BreakpointTable> tables(8);
  for (auto& t : tables) t.update(0.5, 1.0);
  CHECK_THROWS_AS(brute_force_grid(tables, 1.0, 20, 0.0), RefusalError);
}

TEST_CASE("mckp_build maps breakpoints to items") {
  BreakpointTable t;
  t.update(5.0, 7.0);
  t.update(3.0, 1.0);
  const BreakpointTable tables[] = {t};
  const auto inst = mckp_build(tables, 10.0);
  REQUIRE(inst.groups.size() == 1);
  REQUIRE(inst.groups[0].size() == 2);
  CHECK(inst.groups[0][0].weight == 3.0);
  CHECK(inst.groups[0][0].value == -1.0);
  CHECK(inst.groups[0][1].weight == 5.0);
  CHECK(inst.groups[0][1].value == 0.0);
  CHECK(inst.capacity == 10.0);
  CHECK(inst.item_count() == 2);
}

TEST_CASE("mckp_solve_exact: hand examples") {
  MckpInstance inst;
  inst.groups = {{{2.0, 3.0}, {3.0, 4.0}}, {{2.0, 2.5}}};
  inst.capacity = 4.0;
  auto sol = mckp_solve_exact(inst);
  CHECK(sol.value == 5.5);
  CHECK(sol.bid == std::vector<double>{2.0, 2.0});
  inst.capacity = 5.0;
  sol = mckp_solve_exact(inst);
  CHECK(sol.value == 6.5);
  CHECK(sol.bid == std::vector<double>{3.0, 2.0});
  inst.capacity = 1.0;
  sol = mckp_solve_exact(inst);
  CHECK(sol.value == 0.0);
  CHECK_FALSE(sol.choice[0].has_value());

  MckpInstance pick;
  pick.groups = {{{1.0, 5.0}}, {{1.0, 4.0}}};
  pick.capacity = 1.0;
  sol = mckp_solve_exact(pick);
  CHECK(sol.value == 5.0);
  CHECK(sol.bid == std::vector<double>{1.0, 0.0});

  MckpInstance huge;
  huge.groups.assign(2, std::vector<MckpItem>(40, MckpItem{1.0, 1.0}));
  CHECK_THROWS_AS(mckp_solve_exact(huge), RefusalError);
}

TEST_CASE("property: knapsack optimum equals enumerated ERM optimum") {
  std::mt19937_64 rng(41);
  std::uniform_int_distribution<std::size_t> k(1, 3), t(1, 6);
  std::uniform_real_distribution<double> b(0.2, 3.0);
  for (int i = 0; i < 100; ++i) {
    TableGenerator gen;
    gen.on_grid = 0.0;
    const auto tables = random_tables(rng, k(rng), t(rng), gen);
    const double budget = b(rng);
    const double rho = i % 2 ? 0.0 : 0.5;
    const auto knap = mckp_solve_exact(mckp_build(tables, budget, rho));
    const auto erm = erm_optimum_by_enumeration(tables, budget, rho);
    CHECK(knap.value == doctest::Approx(erm.value).epsilon(1e-12));
    double used = 0.0;
    for (double x : knap.bid) used += x;
    CHECK(used <= budget);
  }
}

namespace {

// Midpoint quadrature of E[(pi - lambda)^p 1{lambda <= x}] for the Bernoulli family.
double quad_moment(const BernoulliFamily& f, double x, int power) {
  const double lo = (1.0 - f.epsilon) / 2.0, hi = (1.0 + f.epsilon) / 2.0;
  const int n = 20000;
  const double h = (hi - lo) / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double l = lo + (i + 0.5) * h;
    if (l > x) break;
    sum += f.pi_bar * std::pow(1.0 - l, power) + (1.0 - f.pi_bar) * std::pow(-l, power);
  }
  return sum * h / f.epsilon;
}

}  // namespace

TEST_CASE("bernoulli family: closed-form moments match quadrature") {
  for (double pi_bar : {0.4, 0.5, 0.6}) {
    const BernoulliFamily f{pi_bar, 0.2, 1.0};
    for (double x : {0.0, 0.45, 0.5, 0.55, 0.6, 1.0}) {
      const auto m = option_moments(f, 0, x);
      const double r = quad_moment(f, x, 1), m2 = quad_moment(f, x, 2);
      CHECK(m.mean == doctest::Approx(r).epsilon(1e-6));
      CHECK(m.variance == doctest::Approx(m2 - r * r).epsilon(1e-6));
    }
  }
}

TEST_CASE("bernoulli family: analytic optima") {
  const double eps = 0.05;
  const auto f2 = analytic_optimum(BernoulliFamily{0.5 + eps, eps, 1.0}, 0.0);
  CHECK(f2.bid[0] == doctest::Approx(0.5 + eps / 2));
  CHECK(f2.value == doctest::Approx(eps).epsilon(1e-12));
  const auto f1 = analytic_optimum(BernoulliFamily{0.5 - eps, eps, 1.0}, 0.0);
  CHECK(f1.bid[0] == 0.0);
  CHECK(f1.value == 0.0);
  const auto f0 = analytic_optimum(BernoulliFamily{0.5, eps, 1.0}, 0.0);
  CHECK(f0.bid[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(f0.value == doctest::Approx(eps / 8).epsilon(1e-9));

  // A tight budget caps the bid.
  const auto capped = analytic_optimum(BernoulliFamily{0.5 + eps, eps, 0.5}, 0.0);
  CHECK(capped.bid[0] == 0.5);

  // Risk aversion never raises the objective value.
  const auto risky = analytic_optimum(BernoulliFamily{0.5 + eps, eps, 1.0}, 1.0);
  CHECK(risky.value <= f2.value);
  // Fine scan confirms the optimum.
  double best = 0.0;
  for (int i = 0; i <= 100000; ++i) {
    const double x = i / 100000.0;
    best = std::max(best, expected_objective(BernoulliFamily{0.5 + eps, eps, 1.0}, std::vector<double>{x}, 1.0));
  }
  CHECK(risky.value >= best - 1e-12);
  CHECK(risky.value <= best + 1e-6);
}

TEST_CASE("bernoulli family: Monte Carlo agrees with the closed form") {
  const BernoulliFamily f{0.55, 0.1, 1.0};
  const double x = 0.52;
  const int n = 100000;
  std::mt19937_64 rng(77);
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto d = sample_day(f, rng);
    const double p = x >= d.da[0] ? d.rt[0] - d.da[0] : 0.0;
    sum += p;
    sq += p * p;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / n);
  CHECK(std::abs(mean - option_moments(f, 0, x).mean) <= 3 * se);
}

TEST_CASE("uniform spread family: optimum matches a grid search") {
  const UniformSpreadFamily f{{1.0, 2.0, 1.5}, {0.3, -0.1, 0.2}, {0.4, 0.2, 0.1}, 1.6};
  const auto opt = analytic_optimum(f, 0.5);
  CHECK(opt.value == doctest::Approx(expected_objective(f, opt.bid, 0.5)).epsilon(1e-12));
  double used = 0.0;
  for (double x : opt.bid) used += x;
  CHECK(used <= f.budget + 1e-12);
  const int n = 80;
  double best = -1e300;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j)
      for (int k = 0; i + j + k <= n; ++k) {
        const std::vector<double> x{f.budget * i / n, f.budget * j / n, f.budget * k / n};
        best = std::max(best, expected_objective(f, x, 0.5));
      }
  CHECK(opt.value >= best - 1e-12);

  std::mt19937_64 rng(3);
  double sum = 0.0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto d = sample_day(f, rng);
    sum += d.rt[0] - d.da[0];
  }
  CHECK(sum / draws == doctest::Approx(0.3).epsilon(0.02));
}
