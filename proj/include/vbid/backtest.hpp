#pragma once

// Historical replay: CSV ingestion, lagged policy replay, profit and Sharpe
// reporting, budget sweeps.

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbid/market_model.hpp"
#include "vbid/policy.hpp"

namespace vbid {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD; std::nullopt if malformed or not a calendar date.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date date);

/// Malformed input file; `line` is 1-based (0 when not tied to a line).
class IngestError : public std::runtime_error {
 public:
  IngestError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct HistoryDay {
  Date date;
  std::vector<double> da;  // raw DA price per (zone, hour), zone-major; NaN if missing
  std::vector<double> rt;  // raw RT price, same layout
  bool complete = true;
};

struct PriceHistory {
  std::vector<std::string> zones;  // sorted
  PriceBounds bounds;
  std::vector<HistoryDay> days;    // strictly increasing dates
  std::size_t gap_count = 0;       // missing calendar days between first and last date

  std::size_t options() const { return zones.size() * 48; }
  std::size_t incomplete_days() const;

  /// Translated prices of day d in enumerate_options order.
  MarketDay translated(std::size_t d) const;
};

constexpr std::string_view kHistoryHeader = "date,zone,hour,da_price,rt_price";

/// Reads the `date,zone,hour,da_price,rt_price` schema. An empty price field
/// marks the day incomplete. Throws IngestError on malformed rows, duplicate
/// (date, zone, hour) records or an unknown header.
PriceHistory ingest_csv(std::istream& in, const PriceBounds& bounds);
PriceHistory ingest_csv(const std::string& path, const PriceBounds& bounds);

void write_history_csv(const PriceHistory& history, const std::string& path);

/// Deterministic synthetic history for demos and regression tests.
PriceHistory synthesize_history(std::span<const std::string> zones, std::size_t days, std::uint64_t seed,
                                const PriceBounds& bounds, Date first_day);

struct SharpeRatio {
  std::optional<double> value;
  std::string reason;  // set when value is empty
};

/// sqrt(T) * mean / sample standard deviation (T-1 denominator).
SharpeRatio sharpe(std::span<const double> returns);

struct BacktestOptions {
  double budget = 0.0;
  std::size_t lag_days = 2;
  /// Days before this date are warmup: observed, bid on, but not scored.
  std::optional<Date> test_start;
  std::optional<Date> test_end;  // inclusive
  std::optional<double> rho;     // reported only
  bool record_bids = false;
};

struct BacktestReport {
  std::string policy;
  double budget = 0.0;
  std::optional<double> rho;
  std::vector<Date> dates;
  std::vector<double> profit;
  std::vector<double> cumulative;
  std::vector<double> returns;  // profit / budget
  SharpeRatio sharpe;
  std::size_t skipped_incomplete = 0;
  std::size_t warmup_days = 0;
  /// Bid submitted on every replayed (complete) day, when record_bids is set.
  std::vector<BidVector> bids;

  double total_profit() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

/// Replays complete days in order. Before bidding on day i the policy has seen
/// days up to i - lag_days (indices over complete days). Profit is settled
/// against day i's prices.
BacktestReport run_backtest(Policy& policy, const PriceHistory& history, const BacktestOptions& options);

/// CSV `day,profit,cum_profit`.
void write_report_csv(const BacktestReport& report, const std::string& path);
std::string report_csv(const BacktestReport& report);

/// {policy, B, rho, total_profit, sharpe, days}; sharpe is null when undefined.
nlohmann::json report_summary(const BacktestReport& report);

using RiskPolicyFactory = std::function<std::unique_ptr<Policy>(std::size_t options, double budget, double rho)>;

struct SweepRow {
  double budget = 0.0;
  double rho = 0.0;
  double profit = 0.0;
  SharpeRatio sharpe;
  bool feasible = true;  // every submitted bid satisfied the budget
};

/// One independent replay per (budget, rho) cell, budget-major.
std::vector<SweepRow> budget_sweep(const RiskPolicyFactory& factory, const PriceHistory& history,
                                   std::span<const double> budgets, std::span<const double> rhos,
                                   const BacktestOptions& options, std::size_t threads = 1);

/// CSV `B,rho,profit,sharpe`.
void write_sweep_csv(std::span<const SweepRow> rows, const std::string& path);

}  // namespace vbid
