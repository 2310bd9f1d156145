#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include <fmt/format.h>

#include "vbid/backtest.hpp"
#include "vbid/dpds.hpp"

using namespace vbid;
using namespace std::chrono;

namespace {

const PriceBounds kBounds{0.0, 1000.0};

// One zone; hour 0 gets the given prices, every other hour 50/50.
std::string csv_days(const std::vector<std::pair<double, double>>& hour0) {
  std::string s = std::string(kHistoryHeader) + "\n";
  for (std::size_t d = 0; d < hour0.size(); ++d) {
    for (int h = 0; h < 24; ++h) {
      const double da = h == 0 ? hour0[d].first : 50.0, rt = h == 0 ? hour0[d].second : 50.0;
      s += fmt::format("2021-03-{:02},A,{},{},{}\n", d + 1, h, da, rt);
    }
  }
  return s;
}

PriceHistory from_string(const std::string& s) {
  std::istringstream in(s);
  return ingest_csv(in, kBounds);
}

// Records what it has observed; bids nothing.
class EchoPolicy : public Policy {
 public:
  explicit EchoPolicy(std::size_t k) : k_(k) {}
  std::string name() const override { return "echo"; }
  void observe(const MarketDay& d) override { seen.push_back(d); }
  BidVector next_bid() override {
    seen_at_bid.push_back(seen.size());
    return BidVector::zeros(k_, 1.0);
  }
  std::vector<MarketDay> seen;
  std::vector<std::size_t> seen_at_bid;

 private:
  std::size_t k_;
};

}  // namespace

TEST_CASE("dates") {
  CHECK(parse_date("2020-02-29").has_value());
  CHECK_FALSE(parse_date("2021-02-29").has_value());
  CHECK_FALSE(parse_date("2021-2-01").has_value());
  CHECK(format_date(*parse_date("2021-03-04")) == "2021-03-04");
}

TEST_CASE("ingest_csv: well-formed file") {
  const auto h = from_string(csv_days({{10, 12}, {30, 50}}));
  CHECK(h.zones == std::vector<std::string>{"A"});
  CHECK(h.days.size() == 2);
  CHECK(h.options() == 48);
  CHECK(h.incomplete_days() == 0);
  const auto m = h.translated(0);
  CHECK(m.da[0] == 10.0);
  CHECK(m.da[1] == 990.0);
  CHECK(m.rt[1] == 988.0);
}

TEST_CASE("ingest_csv: malformed input") {
  std::string bad = csv_days({{10, 12}});
  bad.replace(bad.find("10,12"), 5, "1x,12");
  try {
    from_string(bad);
    FAIL("expected an error");
  } catch (const IngestError& e) {
    CHECK(e.line() == 2);
  }
  std::string dup = csv_days({{10, 12}});
  dup += "2021-03-01,A,0,1,2\n";
  CHECK_THROWS_AS(from_string(dup), IngestError);
  CHECK_THROWS_AS(from_string("date,zone,hour,price\n"), IngestError);
  CHECK_THROWS_AS(from_string(std::string(kHistoryHeader) + "\n2021-03-01,A,24,1,2\n"), IngestError);
  CHECK_THROWS_AS(from_string(std::string(kHistoryHeader) + "\n2021-03-01,A,0,1\n"), IngestError);
}

TEST_CASE("ingest_csv: missing values and gaps") {
  std::string s = csv_days({{10, 12}, {30, 50}, {15, 18}});
  s.replace(s.find("2021-03-02,A,5,50,50"), 20, "2021-03-02,A,5,50,");
  const auto h = from_string(s);
  CHECK(h.incomplete_days() == 1);
  CHECK_FALSE(h.days[1].complete);
}

TEST_CASE("sharpe") {
  const std::vector<double> r{1.0, 2.0, 3.0};
  REQUIRE(sharpe(r).value.has_value());
  CHECK(*sharpe(r).value == doctest::Approx(3.4641016).epsilon(1e-7));
  const std::vector<double> neg{-1.0, -2.0, -3.0};
  CHECK(*sharpe(neg).value == doctest::Approx(-*sharpe(r).value));
  const std::vector<double> flat{0.5, 0.5, 0.5};
  CHECK_FALSE(sharpe(flat).value.has_value());
  CHECK_FALSE(sharpe(std::vector<double>{1.0}).value.has_value());
}

TEST_CASE("run_backtest: hindsight example") {
  const auto h = from_string(csv_days({{10, 12}, {30, 50}, {15, 18}}));
  std::vector<double> x(48, 0.0);
  x[0] = 20.0;
  ConstantPolicy p(BidVector(x, 20.0), "fixed");
  BacktestOptions opt;
  opt.budget = 20.0;
  const auto rep = run_backtest(p, h, opt);
  CHECK(rep.profit == std::vector<double>{2.0, 0.0, 3.0});
  CHECK(rep.cumulative == std::vector<double>{2.0, 2.0, 5.0});
  CHECK(rep.returns[2] == 3.0 / 20.0);
  CHECK(rep.total_profit() == 5.0);
  CHECK(report_csv(rep) == "day,profit,cum_profit\n2021-03-01,2,2\n2021-03-02,0,2\n2021-03-03,3,5\n");
  const auto j = report_summary(rep);
  CHECK(j["total_profit"] == 5.0);
  CHECK(j["days"] == 3);

  opt.test_start = *parse_date("2021-03-02");
  ConstantPolicy q(BidVector(x, 20.0), "fixed");
  const auto later = run_backtest(q, h, opt);
  CHECK(later.warmup_days == 1);
  CHECK(later.profit == std::vector<double>{0.0, 3.0});

  opt.lag_days = 3;
  CHECK_THROWS_AS(run_backtest(q, h, opt), RefusalError);
}

TEST_CASE("run_backtest: observation lag") {
  const std::string zone[] = {"A"};
  const auto h = synthesize_history(zone, 10, 4, kBounds, sys_days{year{2021} / 1 / 1});
  for (std::size_t lag : {0u, 1u, 2u, 5u}) {
    EchoPolicy p(h.options());
    BacktestOptions opt;
    opt.budget = 1.0;
    opt.lag_days = lag;
    run_backtest(p, h, opt);
    REQUIRE(p.seen_at_bid.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(p.seen_at_bid[i] == (i >= lag ? i - lag + 1 : 0));
    for (std::size_t i = 0; i < p.seen.size(); ++i) CHECK(p.seen[i].da == h.translated(i).da);
  }
}

TEST_CASE("property: bids never depend on prices inside the lag window") {
  const std::string zone[] = {"A"};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto h = synthesize_history(zone, 12, seed, kBounds, sys_days{year{2021} / 1 / 1});
    BacktestOptions opt;
    opt.budget = 500.0;
    opt.record_bids = true;
    DpdsPolicy a(h.options(), opt.budget, {});
    const auto base = run_backtest(a, h, opt);
    for (std::size_t i = 0; i < 12; ++i) {
      auto altered = h;
      // Perturb day i onwards: bids before day i + lag cannot have seen it.
      for (std::size_t d = i; d < 12; ++d) {
        for (auto& v : altered.days[d].da) v += 7.0;
        for (auto& v : altered.days[d].rt) v -= 3.0;
      }
      DpdsPolicy b(h.options(), opt.budget, {});
      const auto rep = run_backtest(b, altered, opt);
      for (std::size_t j = 0; j < std::min<std::size_t>(i + opt.lag_days, 12); ++j)
        CHECK(rep.bids[j].x == base.bids[j].x);
    }
    // Settlement consistency.
    for (std::size_t j = 0; j < 12; ++j) CHECK(base.profit[j] == settle(base.bids[j], h.translated(j)).total);
    for (const auto& bid : base.bids) CHECK(bid.feasible());
  }
}

TEST_CASE("budget_sweep") {
  const std::string zone[] = {"A", "B"};
  const auto h = synthesize_history(zone, 8, 1, kBounds, sys_days{year{2021} / 1 / 1});
  const RiskPolicyFactory zero = [](std::size_t k, double b, double) -> std::unique_ptr<Policy> {
    return std::make_unique<ZeroPolicy>(k, b);
  };
  const double budgets[] = {100.0, 200.0};
  const double rhos[] = {0.0, 0.5};
  BacktestOptions opt;
  const auto rows = budget_sweep(zero, h, budgets, rhos, opt, 2);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1].budget == 100.0);
  CHECK(rows[1].rho == 0.5);
  for (const auto& r : rows) {
    CHECK(r.profit == 0.0);
    CHECK_FALSE(r.sharpe.value.has_value());
    CHECK(r.feasible);
  }
}

TEST_CASE("synthesize_history is deterministic and round-trips through CSV") {
  const std::string zone[] = {"A"};
  const auto a = synthesize_history(zone, 5, 9, kBounds, sys_days{year{2021} / 1 / 1});
  const auto b = synthesize_history(zone, 5, 9, kBounds, sys_days{year{2021} / 1 / 1});
  CHECK(a.days[4].da == b.days[4].da);
  const auto path = (std::filesystem::temp_directory_path() / "vbid_synth_roundtrip.csv").string();
  write_history_csv(a, path);
  const auto c = ingest_csv(path, kBounds);
  REQUIRE(c.days.size() == 5);
  for (std::size_t d = 0; d < 5; ++d) {
    CHECK(c.days[d].da == a.days[d].da);
    CHECK(c.days[d].rt == a.days[d].rt);
  }
}
