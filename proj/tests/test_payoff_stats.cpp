#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "vbid/payoff_stats.hpp"

using namespace vbid;

namespace {

struct Obs {
  double da, rt;
};

// Direct evaluation over the raw stream; independent of the table.
double batch_mean(const std::vector<Obs>& s, double x) {
  double sum = 0.0;
  for (const auto& o : s) sum += x >= o.da ? o.rt - o.da : 0.0;
  return sum / static_cast<double>(s.size());
}

double batch_sq(const std::vector<Obs>& s, double x) {
  double sum = 0.0;
  for (const auto& o : s) sum += x >= o.da ? (o.rt - o.da) * (o.rt - o.da) : 0.0;
  return sum / static_cast<double>(s.size());
}

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

}  // namespace

TEST_CASE("update: worked examples") {
  BreakpointTable t;
  CHECK(t.days() == 0);
  CHECK(t.avg_payoff(10.0) == 0.0);

  t.update(5.0, 7.0);
  CHECK(vec(t.breakpoints()) == std::vector<double>{0.0, 5.0});
  CHECK(vec(t.avg_payoffs()) == std::vector<double>{0.0, 2.0});
  CHECK(vec(t.avg_sq_payoffs()) == std::vector<double>{0.0, 4.0});

  t.update(3.0, 1.0);
  CHECK(vec(t.breakpoints()) == std::vector<double>{0.0, 3.0, 5.0});
  CHECK(vec(t.avg_payoffs()) == std::vector<double>{0.0, -1.0, 0.0});
  CHECK(vec(t.avg_sq_payoffs()) == std::vector<double>{0.0, 2.0, 4.0});
  CHECK(t.avg_payoff(4.0) == -1.0);
  CHECK(t.avg_payoff(0.0) == 0.0);
  CHECK(t.avg_payoff(1e9) == 0.0);
  CHECK(t.consistent());
}

TEST_CASE("update: duplicate DA prices keep separate breakpoints") {
  BreakpointTable t;
  t.update(5.0, 7.0);
  t.update(5.0, 7.0);
  CHECK(vec(t.breakpoints()) == std::vector<double>{0.0, 5.0, 5.0});
  CHECK(vec(t.avg_payoffs()) == std::vector<double>{0.0, 2.0, 2.0});
  CHECK(t.avg_payoff(5.0) == 2.0);
  CHECK(t.avg_payoff(4.999) == 0.0);
}

TEST_CASE("update: non-positive DA price is cleared by a zero bid") {
  BreakpointTable t;
  t.update(-2.0, 1.0);
  CHECK(t.consistent());
  CHECK(t.avg_payoff(0.0) == 3.0);
  CHECK(t.objective_at(0, 0.0) == 0.0);
}

TEST_CASE("mean_var_payoff") {
  BreakpointTable t;
  t.update(5.0, 7.0);
  t.update(3.0, 1.0);
  // Payoffs at bid 5 are 2 and -2: mean 0, sample variance 8.
  CHECK(t.mean_var_payoff(5.0, 1.0) == doctest::Approx(-8.0).epsilon(1e-12));
  CHECK(t.mean_var_payoff(4.0, 0.0) == t.avg_payoff(4.0));
  CHECK_THROWS_AS(t.mean_var_payoff(4.0, -0.1), std::domain_error);

  BreakpointTable one;
  one.update(1.0, 4.0);
  // t = 1: variance term defined as zero.
  CHECK(one.mean_var_payoff(2.0, 5.0) == 3.0);

  BreakpointTable flat;
  for (int i = 0; i < 10; ++i) flat.update(1.0, 3.0);
  CHECK(flat.mean_var_payoff(1.0, 0.7) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("property: incremental tables match batch recomputation") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> price(0.0, 50.0), noise(-10.0, 10.0), q(0.0, 60.0);
  std::uniform_int_distribution<int> len(1, 150);
  for (int s = 0; s < 100; ++s) {
    std::vector<Obs> stream(static_cast<std::size_t>(len(rng)));
    for (auto& o : stream) {
      o.da = std::round(price(rng));  // frequent duplicates
      o.rt = o.da + noise(rng);
    }
    BreakpointTable t;
    for (const auto& o : stream) t.update(o.da, o.rt);
    REQUIRE(t.consistent());
    CHECK(t.breakpoints().size() == stream.size() + 1);
    CHECK(t.within({-10.0, 10.0}));
    for (int i = 0; i < 100; ++i) {
      const double x = q(rng);
      CHECK(t.avg_payoff(x) == doctest::Approx(batch_mean(stream, x)).epsilon(1e-9));
      CHECK(t.avg_sq_payoff(x) == doctest::Approx(batch_sq(stream, x)).epsilon(1e-9));
    }
    // Every stored entry is the step value at its own breakpoint.
    for (std::size_t j = 1; j < t.breakpoints().size(); ++j) {
      CHECK(t.avg_payoffs()[j] == doctest::Approx(batch_mean(stream, t.breakpoints()[j])).epsilon(1e-9));
    }
  }
}

TEST_CASE("snapshot round trip") {
  std::vector<BreakpointTable> tables(3);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (auto& t : tables)
    for (int i = 0; i < 20; ++i) t.update(u(rng), u(rng));
  const auto snap = snapshot_tables(tables);
  const auto back = restore_tables(nlohmann::json::parse(snap.dump()));
  CHECK(back == tables);

  auto bad = snap;
  bad["version"] = 99;
  CHECK_THROWS(restore_tables(bad));
  auto broken = snap;
  broken["tables"][0]["lambda"][0] = 1.0;
  CHECK_THROWS(restore_tables(broken));
}
