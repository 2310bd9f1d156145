#include "vbid/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "vbid/benchmarks.hpp"
#include "vbid/oracle.hpp"

namespace vbid {

std::vector<Observation> random_stream(std::mt19937_64& rng, std::size_t days, const TableGenerator& gen) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> grid_index(1, gen.grid);
  std::vector<Observation> out(days);
  for (auto& o : out) {
    if (unit(rng) < gen.on_grid) {
      o.da = grid_point(grid_index(rng), gen.budget, gen.grid);
    } else {
      // (0, factor*B]; 1 - unit avoids a zero draw.
      o.da = (1.0 - unit(rng)) * gen.max_price_factor * gen.budget;
    }
    o.rt = o.da + gen.spread * (2.0 * unit(rng) - 1.0);
  }
  return out;
}

std::vector<BreakpointTable> random_tables(std::mt19937_64& rng, std::size_t options, std::size_t days,
                                           const TableGenerator& gen) {
  std::vector<BreakpointTable> tables(options);
  for (auto& t : tables) {
    for (const auto& o : random_stream(rng, days, gen)) t.update(o.da, o.rt);
  }
  return tables;
}

namespace {

void record(SuiteResult& s, bool ok, const std::string& detail) {
  ++s.cases;
  if (!ok) {
    if (s.failures == 0) s.first_failure = detail;
    ++s.failures;
  }
}

SuiteResult dp_suite(std::mt19937_64& rng, std::size_t instances) {
  SuiteResult s{"dp-vs-bruteforce", 0, 0, {}};
  std::uniform_int_distribution<std::size_t> k_dist(1, 3), t_dist(1, 20), g_dist(2, 8);
  std::uniform_real_distribution<double> b_dist(0.5, 5.0);
  const double rhos[] = {0.0, 0.002, 1.0};
  for (std::size_t i = 0; i < instances; ++i) {
    TableGenerator gen;
    gen.budget = b_dist(rng);
    gen.grid = g_dist(rng);
    const auto tables = random_tables(rng, k_dist(rng), t_dist(rng), gen);
    const double rho = rhos[i % 3];
    const auto dp = solve(tables, gen.budget, gen.grid, rho);
    const auto bf = brute_force_grid(tables, gen.budget, gen.grid, rho);
    const bool feasible = dp.bid.feasible() &&
                          std::accumulate(dp.grid_bid.begin(), dp.grid_bid.end(), std::size_t{0}) <= gen.grid;
    record(s, dp.value == bf.value && feasible,
           fmt::format("instance {}: dp {} vs brute force {}", i, dp.value, bf.value));
  }
  return s;
}

SuiteResult incremental_suite(std::mt19937_64& rng, std::size_t streams) {
  SuiteResult s{"incremental-vs-batch", 0, 0, {}};
  std::uniform_int_distribution<std::size_t> t_dist(1, 200);
  std::uniform_real_distribution<double> q_dist(0.0, 1.3);
  for (std::size_t i = 0; i < streams; ++i) {
    TableGenerator gen;
    const auto stream = random_stream(rng, t_dist(rng), gen);
    BreakpointTable table;
    for (const auto& o : stream) table.update(o.da, o.rt);
    bool ok = table.consistent();
    const double t = static_cast<double>(stream.size());
    for (int q = 0; q < 100 && ok; ++q) {
      const double x = q_dist(rng);
      double r = 0.0;
      double v = 0.0;
      for (const auto& o : stream) {
        if (x >= o.da) {
          r += (o.rt - o.da);
          v += (o.rt - o.da) * (o.rt - o.da);
        }
      }
      r /= t;
      v /= t;
      ok = std::abs(table.avg_payoff(x) - r) <= 1e-9 * std::max(1.0, std::abs(r)) &&
           std::abs(table.avg_sq_payoff(x) - v) <= 1e-9 * std::max(1.0, std::abs(v));
    }
    record(s, ok, fmt::format("stream {} (t={})", i, stream.size()));
  }
  return s;
}

SuiteResult mean_variance_suite(std::mt19937_64& rng, std::size_t streams) {
  SuiteResult s{"mean-variance-identity", 0, 0, {}};
  std::uniform_int_distribution<std::size_t> t_dist(2, 200);
  std::uniform_real_distribution<double> q_dist(0.0, 1.3);
  std::uniform_real_distribution<double> rho_dist(0.0, 2.0);
  for (std::size_t i = 0; i < streams; ++i) {
    TableGenerator gen;
    const auto stream = random_stream(rng, t_dist(rng), gen);
    BreakpointTable table;
    for (const auto& o : stream) table.update(o.da, o.rt);
    const double t = static_cast<double>(stream.size());
    bool ok = true;
    for (int q = 0; q < 20 && ok; ++q) {
      const double x = q_dist(rng);
      const double rho = rho_dist(rng);
      double mean = 0.0;
      for (const auto& o : stream) mean += x >= o.da ? o.rt - o.da : 0.0;
      mean /= t;
      double ss = 0.0;
      for (const auto& o : stream) {
        const double p = x >= o.da ? o.rt - o.da : 0.0;
        ss += (p - mean) * (p - mean);
      }
      const double direct = mean - rho / (t - 1.0) * ss;
      const double got = table.mean_var_payoff(x, rho);
      ok = std::abs(got - direct) <= 1e-9 * std::max(1.0, std::abs(direct));
    }
    record(s, ok, fmt::format("stream {} (t={})", i, stream.size()));
  }
  return s;
}

SuiteResult projection_suite(std::mt19937_64& rng, std::size_t cases) {
  SuiteResult s{"projection", 0, 0, {}};
  std::uniform_int_distribution<std::size_t> n_dist(1, 12);
  std::uniform_real_distribution<double> x_dist(-5.0, 10.0);
  std::uniform_real_distribution<double> b_dist(0.1, 20.0);
  for (std::size_t i = 0; i < cases; ++i) {
    const std::size_t n = n_dist(rng);
    const double budget = b_dist(rng);
    std::vector<double> x(n), z(n);
    for (auto& v : x) v = x_dist(rng);
    for (auto& v : z) v = x_dist(rng);
    const auto y = project_to_feasible(x, budget);
    const auto yy = project_to_feasible(y, budget);
    const auto pz = project_to_feasible(z, budget);
    bool ok = BidVector(y, budget).feasible(1e-12);
    double drift = 0.0, dy = 0.0, dx = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      drift = std::max(drift, std::abs(yy[k] - y[k]));
      dy += (y[k] - pz[k]) * (y[k] - pz[k]);
      dx += (x[k] - z[k]) * (x[k] - z[k]);
    }
    ok = ok && drift <= 1e-12 * budget && std::sqrt(dy) <= std::sqrt(dx) + 1e-12;
    // Variational inequality <x - y, v - y> <= 0 at every vertex v of the feasible set.
    double at_zero = 0.0;
    for (std::size_t k = 0; k < n; ++k) at_zero += (x[k] - y[k]) * (0.0 - y[k]);
    ok = ok && at_zero <= 1e-9;
    for (std::size_t e = 0; e < n && ok; ++e) {
      double at_vertex = 0.0;
      for (std::size_t k = 0; k < n; ++k) at_vertex += (x[k] - y[k]) * ((k == e ? budget : 0.0) - y[k]);
      ok = at_vertex <= 1e-9;
    }
    record(s, ok, fmt::format("case {}", i));
  }
  return s;
}

SuiteResult erm_suite(std::mt19937_64& rng, std::size_t instances) {
  SuiteResult s{"erm-mckp-equivalence", 0, 0, {}};
  std::uniform_int_distribution<std::size_t> k_dist(1, 3), t_dist(1, 6);
  std::uniform_real_distribution<double> b_dist(0.2, 3.0);
  for (std::size_t i = 0; i < instances; ++i) {
    TableGenerator gen;
    gen.on_grid = 0.0;
    const auto tables = random_tables(rng, k_dist(rng), t_dist(rng), gen);
    record(s, erm_equivalence_check(tables, b_dist(rng)), fmt::format("instance {}", i));
  }
  return s;
}

SuiteResult tie_suite(TieRule rule) {
  SuiteResult s{"tie-rule", 0, 0, {}};
  {
    // Zero-payoff option: every bid ties with not bidding.
    BreakpointTable t;
    t.update(0.5, 0.5);
    const BreakpointTable tables[] = {t};
    const auto sol = solve(tables, 1.0, 4, 0.0, rule);
    record(s, sol.bid.x[0] == 0.0, fmt::format("zero-payoff tie picked bid {}", sol.bid.x[0]));
  }
  {
    // Two identical options, budget for one: the first option keeps the allocation.
    BreakpointTable t;
    t.update(0.75, 1.75);
    const BreakpointTable tables[] = {t, t};
    const auto sol = solve(tables, 1.0, 4, 0.0, rule);
    record(s, sol.bid.x[0] == 0.75 && sol.bid.x[1] == 0.0,
           fmt::format("symmetric tie picked ({}, {})", sol.bid.x[0], sol.bid.x[1]));
  }
  {
    // Above-breakpoint bids are frozen out; the cheapest clearing bid wins.
    BreakpointTable t;
    t.update(0.3, 1.3);
    const BreakpointTable tables[] = {t};
    const auto sol = solve(tables, 1.0, 8, 0.0, rule);
    record(s, sol.bid.x[0] == 0.375, fmt::format("freeze tie picked {}", sol.bid.x[0]));
  }
  return s;
}

}  // namespace

std::vector<SuiteResult> run_verify(const VerifyOptions& options) {
  std::mt19937_64 rng(options.seed);
  const std::size_t scale = options.quick ? 10 : 1;
  std::vector<SuiteResult> out;
  out.push_back(dp_suite(rng, 1000 / scale));
  out.push_back(incremental_suite(rng, 500 / scale));
  out.push_back(mean_variance_suite(rng, 500 / scale));
  out.push_back(projection_suite(rng, 1000 / scale));
  out.push_back(erm_suite(rng, 200 / scale));
  out.push_back(tie_suite(options.tie_rule));
  return out;
}

BenchRow bench_solve(std::size_t options, std::size_t days, std::size_t grid, std::size_t runs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  TableGenerator gen;
  gen.budget = 1.0;
  gen.grid = grid;
  gen.on_grid = 0.0;
  gen.max_price_factor = 1.0;
  auto tables = random_tables(rng, options, days > 0 ? days - 1 : 0, gen);
  // One breakpoint at the budget so every stage scans the full grid.
  for (auto& t : tables) t.update(gen.budget, gen.budget + 0.1);
  std::vector<double> samples;
  volatile double sink = 0.0;
  for (std::size_t r = 0; r < runs; ++r) {
    std::size_t reps = 0;
    const auto start = std::chrono::steady_clock::now();
    auto now = start;
    do {
      sink = sink + solve(tables, gen.budget, grid, 0.0).value;
      ++reps;
      now = std::chrono::steady_clock::now();
    } while (now - start < std::chrono::milliseconds(20));
    samples.push_back(std::chrono::duration<double>(now - start).count() / static_cast<double>(reps));
  }
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(samples.size() / 2), samples.end());
  return {options, days, grid, samples[samples.size() / 2]};
}

}  // namespace vbid
