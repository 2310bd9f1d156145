// vbid: simulate / backtest / sweep / verify / bench.
//
// Every option can come from a TOML/INI config file (--config); flags given on
// the command line win over the file, and VBID_* environment variables fill in
// global options not given either way.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/os.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "vbid/backtest.hpp"
#include "vbid/benchmarks.hpp"
#include "vbid/dpds.hpp"
#include "vbid/oracle.hpp"
#include "vbid/simulator.hpp"
#include "vbid/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vbid;

namespace {

constexpr int kUsageError = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::string out = "out";
  std::size_t threads = 1;
  bool quick = false;
  std::string log_level = "warn";
};

struct PolicyOpts {
  std::string name;
  double rho = 0.0;
  std::string grid = "sqrt";  // sqrt | days-minus-one
  double alpha = 1.0;
  double gamma = 0.5;
  double sa_a = SaConfig{}.a;
  double sa_c = SaConfig{}.c;
  std::size_t svm_training_days = SvmGrConfig{}.training_days;
  std::size_t svm_lookback = SvmGrConfig{}.lookback_days;
  std::size_t svm_epochs = SvmGrConfig{}.epochs;
  std::string greedy = "skip";  // skip | stop
};

const std::vector<std::string> kPolicies{"dpds", "ucbid-gr", "sa", "svm-gr", "zero", "oracle"};

void add_policy_options(CLI::App* app, PolicyOpts& p, bool required) {
  auto* opt = app->add_option("--policy", p.name, "Bidding policy")->check(CLI::IsMember(kPolicies));
  if (required) opt->required();
  app->add_option("--rho", p.rho, "Risk-aversion weight (DPDS objective)")->check(CLI::NonNegativeNumber);
  app->add_option("--grid", p.grid, "DPDS grid schedule")->check(CLI::IsMember({"sqrt", "days-minus-one"}));
  app->add_option("--alpha", p.alpha, "DPDS grid scale: alpha_t = ceil(alpha t^gamma)")->check(CLI::PositiveNumber);
  app->add_option("--gamma", p.gamma, "DPDS grid exponent");
  app->add_option("--sa-a", p.sa_a, "SA step-size constant a")->check(CLI::PositiveNumber);
  app->add_option("--sa-c", p.sa_c, "SA perturbation constant c")->check(CLI::PositiveNumber);
  app->add_option("--svm-training-days", p.svm_training_days, "SVM-GR observations per training window");
  app->add_option("--svm-lookback", p.svm_lookback, "SVM-GR feature window in days");
  app->add_option("--svm-epochs", p.svm_epochs, "SVM-GR training epochs");
  app->add_option("--greedy", p.greedy, "Greedy allocation rule")->check(CLI::IsMember({"skip", "stop"}));
}

GreedyRule greedy_rule(const PolicyOpts& p) {
  return p.greedy == "stop" ? GreedyRule::StopAtFirstMiss : GreedyRule::SkipAndContinue;
}

// `oracle` is resolved by the caller, which knows the market.
RiskPolicyFactory make_factory(const PolicyOpts& p, std::uint64_t seed) {
  if (p.name == "dpds") {
    GridSchedule schedule = p.grid == "days-minus-one" ? GridSchedule::days_minus_one()
                                                       : GridSchedule{p.alpha, p.gamma, {}};
    return [schedule](std::size_t k, double b, double rho) -> std::unique_ptr<Policy> {
      return std::make_unique<DpdsPolicy>(k, b, DpdsConfig{schedule, rho});
    };
  }
  if (p.name == "ucbid-gr") {
    const auto rule = greedy_rule(p);
    return [rule](std::size_t k, double b, double) -> std::unique_ptr<Policy> {
      return std::make_unique<UcbidGrPolicy>(k, b, rule);
    };
  }
  if (p.name == "sa") {
    SaConfig cfg;
    cfg.a = p.sa_a;
    cfg.c = p.sa_c;
    return [cfg](std::size_t k, double b, double) -> std::unique_ptr<Policy> {
      return std::make_unique<SaPolicy>(k, b, cfg);
    };
  }
  if (p.name == "svm-gr") {
    SvmGrConfig cfg;
    cfg.training_days = p.svm_training_days;
    cfg.lookback_days = p.svm_lookback;
    cfg.epochs = p.svm_epochs;
    cfg.seed = seed;
    cfg.rule = greedy_rule(p);
    return [cfg](std::size_t k, double b, double) -> std::unique_ptr<Policy> {
      return std::make_unique<SvmGrPolicy>(k, b, cfg);
    };
  }
  if (p.name == "zero") {
    return [](std::size_t k, double b, double) -> std::unique_ptr<Policy> { return std::make_unique<ZeroPolicy>(k, b); };
  }
  throw CLI::ValidationError("--policy", fmt::format("policy '{}' is not available here", p.name));
}

void write_json(const json& j, const fs::path& path) {
  auto f = fmt::output_file(path.string());
  f.print("{}\n", j.dump(2));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CLI::ValidationError("--out", fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
}

json trajectory_json(const RegretTrajectory& t) {
  return {{"policy", t.policy},
          {"replications", t.replications},
          {"horizon", t.horizon()},
          {"optimum_value", t.optimum_value},
          {"cumulative_regret", t.cumulative.empty() ? 0.0 : t.cumulative.back()}};
}

// ---------------------------------------------------------------------------

struct SimulateOpts {
  std::string model;
  std::size_t horizon = 2000;
  std::size_t reps = 50;
  double epsilon = 0.05;
  double budget = 1.0;
  std::vector<double> da_high{1.0};
  std::vector<double> spread_mean{0.1};
  std::vector<double> spread_sd{0.2};
  std::vector<std::size_t> horizons;
  PolicyOpts policy;
};

int run_simulate(const Globals& g, SimulateOpts s) {
  if (g.quick) {
    s.horizon = std::min<std::size_t>(s.horizon, 500);
    s.reps = std::min<std::size_t>(s.reps, 5);
    // Slope horizons beyond the shortened run are dropped rather than refused.
    std::erase_if(s.horizons, [&](std::size_t h) { return h > s.horizon; });
    if (s.horizons.size() < 3) s.horizons.clear();
  }
  const fs::path out = g.out;
  ensure_dir(out);

  std::vector<std::pair<std::string, DistributionSpec>> markets;
  if (s.model == "lower-bound") {
    const auto fam = lower_bound_family(s.horizon);
    markets = {{"f1", fam.low}, {"f2", fam.high}};
  } else if (s.model == "f0" || s.model == "f1" || s.model == "f2") {
    const double shift = s.model == "f1" ? -s.epsilon : s.model == "f2" ? s.epsilon : 0.0;
    markets = {{s.model, BernoulliFamily{0.5 + shift, s.epsilon, s.budget}}};
  } else {
    if (s.da_high.size() != s.spread_mean.size() || s.da_high.size() != s.spread_sd.size()) {
      throw CLI::ValidationError("--da-high/--spread-mean/--spread-sd", "need one value per option");
    }
    markets = {{"uniform-spread", UniformSpreadFamily{s.da_high, s.spread_mean, s.spread_sd, s.budget}}};
  }

  ExperimentConfig cfg;
  cfg.horizon = s.horizon;
  cfg.replications = s.reps;
  cfg.rho = s.policy.rho;
  cfg.seed = g.seed;
  cfg.threads = g.threads;

  json summary{{"model", s.model}, {"T", s.horizon}, {"reps", s.reps}, {"seed", g.seed}, {"rho", s.policy.rho}};
  double worst = 0.0;
  for (const auto& [label, spec] : markets) {
    PolicyFactory factory;
    if (s.policy.name == "oracle") {
      const auto opt = analytic_optimum(spec, s.policy.rho);
      factory = [opt](std::size_t, double b) -> std::unique_ptr<Policy> {
        return std::make_unique<ConstantPolicy>(BidVector(opt.bid, b), "oracle");
      };
    } else {
      const auto rf = make_factory(s.policy, g.seed);
      const double rho = s.policy.rho;
      factory = [rf, rho](std::size_t k, double b) { return rf(k, b, rho); };
    }
    const auto traj = run_experiment(factory, spec, cfg);
    const auto csv = out / fmt::format("regret_{}.csv", label);
    write_regret_csv(traj, csv.string());
    auto entry = trajectory_json(traj);
    entry["csv"] = csv.string();
    if (!s.horizons.empty()) {
      const auto check = slope_check(traj, s.horizons);
      entry["slope_horizons"] = check.horizons;
      entry["slope_ratios"] = check.ratios;
      entry["slope_spread"] = check.spread();
    }
    worst = std::max(worst, traj.cumulative.back());
    summary["runs"][label] = entry;
  }
  if (s.model == "lower-bound") {
    summary["epsilon"] = lower_bound_family(s.horizon).epsilon;
    summary["bound"] = lower_bound_value(s.horizon);
    summary["max_regret"] = worst;
    summary["meets_bound"] = worst >= lower_bound_value(s.horizon);
  }
  write_json(summary, out / "simulate_summary.json");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct HistoryOpts {
  std::string path;
  std::size_t synthetic_days = 0;
  std::vector<std::string> zones{"A"};
  double lower = -30.0;
  double upper = 1050.0;
  std::string start_date = "2021-01-01";
  std::string save_path;
};

void add_history_options(CLI::App* app, HistoryOpts& h) {
  app->add_option("--history", h.path, "Price history CSV (date,zone,hour,da_price,rt_price)")
      ->check(CLI::ExistingFile);
  app->add_option("--synthetic-days", h.synthetic_days, "Generate a synthetic history of N days instead");
  app->add_option("--zones", h.zones, "Zones of the synthetic history");
  app->add_option("--lower", h.lower, "DA price lower bound");
  app->add_option("--upper", h.upper, "DA price upper bound");
  app->add_option("--start-date", h.start_date, "First date of the synthetic history");
  app->add_option("--save-history", h.save_path, "Also write the history used to this CSV");
}

PriceHistory load_history(const HistoryOpts& h, std::uint64_t seed) {
  const PriceBounds bounds{h.lower, h.upper};
  if (!(h.lower < h.upper)) throw CLI::ValidationError("--lower/--upper", "lower bound must be below upper bound");
  if (!h.path.empty() && h.synthetic_days > 0) {
    throw CLI::ValidationError("--history", "give either --history or --synthetic-days, not both");
  }
  PriceHistory history;
  if (!h.path.empty()) {
    history = ingest_csv(h.path, bounds);
  } else {
    if (h.synthetic_days == 0) throw CLI::ValidationError("--history", "a price history is required");
    const auto first = parse_date(h.start_date);
    if (!first) throw CLI::ValidationError("--start-date", "expected YYYY-MM-DD");
    history = synthesize_history(h.zones, h.synthetic_days, seed, bounds, *first);
  }
  if (!h.save_path.empty()) write_history_csv(history, h.save_path);
  return history;
}

std::optional<Date> date_option(const std::string& text, const std::string& flag) {
  if (text.empty()) return std::nullopt;
  const auto d = parse_date(text);
  if (!d) throw CLI::ValidationError(flag, "expected YYYY-MM-DD");
  return d;
}

struct BacktestOpts {
  HistoryOpts history;
  PolicyOpts policy;
  double budget = 0.0;
  std::size_t lag = 2;
  std::string test_start;
  std::string test_end;
};

int run_backtest_cmd(const Globals& g, const BacktestOpts& b) {
  const fs::path out = g.out;
  const auto history = load_history(b.history, g.seed);
  ensure_dir(out);
  BacktestOptions opt;
  opt.budget = b.budget;
  opt.lag_days = b.lag;
  opt.test_start = date_option(b.test_start, "--test-start");
  opt.test_end = date_option(b.test_end, "--test-end");
  opt.rho = b.policy.rho;
  auto policy = make_factory(b.policy, g.seed)(history.options(), b.budget, b.policy.rho);
  const auto report = run_backtest(*policy, history, opt);
  write_report_csv(report, (out / "report.csv").string());
  auto summary = report_summary(report);
  summary["skipped_incomplete"] = report.skipped_incomplete;
  summary["warmup_days"] = report.warmup_days;
  write_json(summary, out / "summary.json");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

struct SweepOpts {
  HistoryOpts history;
  PolicyOpts policy;
  std::vector<double> budgets;
  std::vector<double> rhos{0.0};
  std::size_t lag = 2;
  std::string test_start;
  std::string test_end;
};

int run_sweep_cmd(const Globals& g, const SweepOpts& s) {
  const fs::path out = g.out;
  const auto history = load_history(s.history, g.seed);
  ensure_dir(out);
  BacktestOptions opt;
  opt.lag_days = s.lag;
  opt.test_start = date_option(s.test_start, "--test-start");
  opt.test_end = date_option(s.test_end, "--test-end");
  const auto rows = budget_sweep(make_factory(s.policy, g.seed), history, s.budgets, s.rhos, opt, g.threads);
  write_sweep_csv(rows, (out / "sweep.csv").string());
  json summary{{"policy", s.policy.name}, {"cells", rows.size()}, {"rows", json::array()}};
  for (const auto& r : rows) {
    summary["rows"].push_back({{"B", r.budget},
                               {"rho", r.rho},
                               {"profit", r.profit},
                               {"sharpe", r.sharpe.value ? json(*r.sharpe.value) : json(nullptr)},
                               {"feasible", r.feasible}});
  }
  write_json(summary, out / "sweep_summary.json");
  std::cout << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

int run_verify_cmd(const Globals& g, const std::string& fault) {
  VerifyOptions opt;
  opt.quick = g.quick;
  opt.seed = g.seed;
  if (fault == "tie-rule") opt.tie_rule = TieRule::LargestBid;
  const auto results = run_verify(opt);
  json summary{{"quick", g.quick}, {"seed", g.seed}, {"suites", json::array()}};
  bool ok = true;
  for (const auto& r : results) {
    fmt::print("{:<24} {:>5} cases  {}\n", r.name, r.cases,
               r.passed() ? "PASS" : fmt::format("FAIL ({} failures; first: {})", r.failures, r.first_failure));
    summary["suites"].push_back(
        {{"name", r.name}, {"cases", r.cases}, {"failures", r.failures}, {"first_failure", r.first_failure}});
    ok = ok && r.passed();
  }
  summary["passed"] = ok;
  const fs::path out = g.out;
  ensure_dir(out);
  write_json(summary, out / "verify.json");
  return ok ? 0 : 1;
}

struct BenchOpts {
  std::vector<std::size_t> options{8, 16, 32};
  std::vector<std::size_t> grids{50, 100, 200};
  std::size_t days = 200;
  std::size_t runs = 5;
};

int run_bench_cmd(const Globals& g, BenchOpts b) {
  if (g.quick) {
    b.options = {2, 4};
    b.grids = {8, 16};
    b.days = 20;
    b.runs = 3;
  }
  const fs::path out = g.out;
  ensure_dir(out);
  auto csv = fmt::output_file((out / "bench.csv").string());
  csv.print("options,days,grid,seconds\n");
  json rows = json::array();
  for (std::size_t k : b.options) {
    for (std::size_t a : b.grids) {
      const auto row = bench_solve(k, b.days, a, b.runs, g.seed);
      csv.print("{},{},{},{:.9g}\n", row.options, row.days, row.grid, row.seconds);
      fmt::print("K={:<5} t={:<6} alpha={:<6} {:.3f} ms\n", row.options, row.days, row.grid, row.seconds * 1e3);
      rows.push_back({{"options", row.options}, {"days", row.days}, {"grid", row.grid}, {"seconds", row.seconds}});
    }
  }
  csv.close();
  write_json({{"runs", b.runs}, {"rows", rows}}, out / "bench_summary.json");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-constrained virtual bidding: simulation, backtests and verification", "vbid"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags override it");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->envname("VBID_SEED");
  app.add_option("--out", g.out, "Output directory")->envname("VBID_OUT");
  app.add_option("--threads", g.threads, "Worker threads")->envname("VBID_THREADS")->check(CLI::PositiveNumber);
  app.add_flag("--quick", g.quick, "Reduced problem sizes")->envname("VBID_QUICK");
  app.add_option("--log-level", g.log_level, "spdlog level")
      ->envname("VBID_LOG_LEVEL")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  SimulateOpts sim;
  auto* simulate = app.add_subcommand("simulate", "Expected-regret trajectories on synthetic markets");
  simulate->add_option("--model", sim.model, "Market model")
      ->required()
      ->check(CLI::IsMember({"lower-bound", "f0", "f1", "f2", "uniform-spread"}));
  simulate->add_option("--T", sim.horizon, "Horizon in days")->check(CLI::PositiveNumber);
  simulate->add_option("--reps", sim.reps, "Replications")->check(CLI::PositiveNumber);
  simulate->add_option("--epsilon", sim.epsilon, "Half-width of the f0/f1/f2 DA range")->check(CLI::Range(0.0, 1.0));
  simulate->add_option("--budget", sim.budget, "Budget")->check(CLI::PositiveNumber);
  simulate->add_option("--da-high", sim.da_high, "uniform-spread: DA upper limit per option");
  simulate->add_option("--spread-mean", sim.spread_mean, "uniform-spread: spread mean per option");
  simulate->add_option("--spread-sd", sim.spread_sd, "uniform-spread: spread standard deviation per option");
  simulate->add_option("--horizons", sim.horizons, "Horizons for the R_T/sqrt(T log T) check");
  add_policy_options(simulate, sim.policy, true);

  BacktestOpts bt;
  bt.policy.grid = "days-minus-one";
  auto* backtest = app.add_subcommand("backtest", "Replay one policy over a price history");
  add_history_options(backtest, bt.history);
  add_policy_options(backtest, bt.policy, true);
  backtest->add_option("--budget", bt.budget, "Daily budget B")->required()->check(CLI::PositiveNumber);
  backtest->add_option("--lag", bt.lag, "Observation lag in days");
  backtest->add_option("--test-start", bt.test_start, "First scored date (earlier days are warmup)");
  backtest->add_option("--test-end", bt.test_end, "Last scored date");

  SweepOpts sw;
  sw.policy.grid = "days-minus-one";
  auto* sweep = app.add_subcommand("sweep", "Backtest over a grid of budgets and risk weights");
  add_history_options(sweep, sw.history);
  add_policy_options(sweep, sw.policy, true);
  sweep->add_option("--budgets", sw.budgets, "Budgets")->required();
  sweep->add_option("--rhos", sw.rhos, "Risk weights");
  sweep->add_option("--lag", sw.lag, "Observation lag in days");
  sweep->add_option("--test-start", sw.test_start, "First scored date");
  sweep->add_option("--test-end", sw.test_end, "Last scored date");

  std::string fault;
  auto* verify = app.add_subcommand("verify", "Run the oracle and property suites");
  verify->add_option("--inject-fault", fault, "Negative control: run with a deliberate defect")
      ->check(CLI::IsMember({"tie-rule"}));

  BenchOpts bo;
  auto* bench = app.add_subcommand("bench", "Time the DP across options and grid sizes");
  bench->add_option("--options", bo.options, "Option counts K");
  bench->add_option("--grids", bo.grids, "Grid sizes alpha_t");
  bench->add_option("--days", bo.days, "Observed days t")->check(CLI::PositiveNumber);
  bench->add_option("--runs", bo.runs, "Runs per cell (median reported)")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  spdlog::set_level(spdlog::level::from_str(g.log_level));
  try {
    if (*simulate) return run_simulate(g, sim);
    if (*backtest) return run_backtest_cmd(g, bt);
    if (*sweep) return run_sweep_cmd(g, sw);
    if (*verify) return run_verify_cmd(g, fault);
    if (*bench) return run_bench_cmd(g, bo);
  } catch (const CLI::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsageError;
  } catch (const IngestError& e) {
    fmt::print(stderr, "ingest error: {}\n", e.what());
    return 3;
  } catch (const RefusalError& e) {
    fmt::print(stderr, "refused: {}\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
