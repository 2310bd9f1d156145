#include "vbid/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>
#include <spdlog/spdlog.h>

#include "vbid/parallel.hpp"

namespace vbid {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

template <typename T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string_view chomp(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  if (!parse_number(text.substr(0, 4), y) || !parse_number(text.substr(5, 2), m) ||
      !parse_number(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                     static_cast<unsigned>(ymd.day()));
}

IngestError::IngestError(std::size_t line, const std::string& what)
    : std::runtime_error(line ? fmt::format("line {}: {}", line, what) : what), line_(line) {}

std::size_t PriceHistory::incomplete_days() const {
  return static_cast<std::size_t>(std::count_if(days.begin(), days.end(), [](const auto& d) { return !d.complete; }));
}

MarketDay PriceHistory::translated(std::size_t d) const {
  const auto& day = days.at(d);
  MarketDay out;
  out.da.resize(options());
  out.rt.resize(options());
  for (std::size_t z = 0; z < zones.size(); ++z) {
    for (int h = 0; h < 24; ++h) {
      const std::size_t raw = z * 24 + static_cast<std::size_t>(h);
      for (Side side : {Side::Demand, Side::Supply}) {
        const std::size_t k = option_index(z, h, side);
        out.da[k] = translate(day.da[raw], side, bounds);
        out.rt[k] = translate(day.rt[raw], side, bounds);
      }
    }
  }
  return out;
}

PriceHistory ingest_csv(std::istream& in, const PriceBounds& bounds) {
  validate(bounds);
  struct Record {
    double da;
    double rt;
  };
  std::map<Date, std::map<std::pair<std::string, int>, Record>> rows;
  std::set<std::string> zone_set;

  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw IngestError(0, "empty price file");
  ++lineno;
  if (chomp(line) != kHistoryHeader) {
    throw IngestError(lineno, fmt::format("expected header '{}'", kHistoryHeader));
  }
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view row = chomp(line);
    if (row.empty()) continue;
    const auto fields = split(row, ',');
    if (fields.size() != 5) throw IngestError(lineno, fmt::format("expected 5 fields, found {}", fields.size()));
    const auto date = parse_date(fields[0]);
    if (!date) throw IngestError(lineno, fmt::format("invalid date '{}'", fields[0]));
    if (fields[1].empty()) throw IngestError(lineno, "empty zone");
    int hour = 0;
    if (!parse_number(fields[2], hour) || hour < 0 || hour > 23) {
      throw IngestError(lineno, fmt::format("invalid hour '{}'", fields[2]));
    }
    Record rec{kMissing, kMissing};
    if (!fields[3].empty() && !parse_number(fields[3], rec.da)) {
      throw IngestError(lineno, fmt::format("non-numeric DA price '{}'", fields[3]));
    }
    if (!fields[4].empty() && !parse_number(fields[4], rec.rt)) {
      throw IngestError(lineno, fmt::format("non-numeric RT price '{}'", fields[4]));
    }
    std::string zone(fields[1]);
    auto [it, inserted] = rows[*date].try_emplace({zone, hour}, rec);
    if (!inserted) {
      throw IngestError(lineno, fmt::format("duplicate record for {} zone {} hour {}", fields[0], zone, hour));
    }
    zone_set.insert(std::move(zone));
  }
  if (rows.empty()) throw IngestError(0, "price file has no data rows");

  PriceHistory h;
  h.bounds = bounds;
  h.zones.assign(zone_set.begin(), zone_set.end());
  std::map<std::string, std::size_t> zone_index;
  for (std::size_t z = 0; z < h.zones.size(); ++z) zone_index[h.zones[z]] = z;

  for (const auto& [date, records] : rows) {
    HistoryDay day;
    day.date = date;
    day.da.assign(h.zones.size() * 24, kMissing);
    day.rt.assign(h.zones.size() * 24, kMissing);
    for (const auto& [key, rec] : records) {
      const std::size_t slot = zone_index[key.first] * 24 + static_cast<std::size_t>(key.second);
      day.da[slot] = rec.da;
      day.rt[slot] = rec.rt;
    }
    for (std::size_t i = 0; i < day.da.size(); ++i) {
      if (std::isnan(day.da[i]) || std::isnan(day.rt[i])) day.complete = false;
    }
    h.days.push_back(std::move(day));
  }
  for (std::size_t d = 1; d < h.days.size(); ++d) {
    h.gap_count += static_cast<std::size_t>((h.days[d].date - h.days[d - 1].date).count() - 1);
  }
  if (h.gap_count > 0) spdlog::warn("price history skips {} calendar day(s)", h.gap_count);
  if (const auto n = h.incomplete_days(); n > 0) {
    spdlog::warn("{} incomplete day(s) will be excluded from replay", n);
  }
  return h;
}

PriceHistory ingest_csv(const std::string& path, const PriceBounds& bounds) {
  std::ifstream in(path);
  if (!in) throw IngestError(0, fmt::format("cannot open price file '{}'", path));
  return ingest_csv(in, bounds);
}

void write_history_csv(const PriceHistory& history, const std::string& path) {
  auto file = fmt::output_file(path);
  file.print("{}\n", kHistoryHeader);
  auto cell = [](double v) { return std::isnan(v) ? std::string() : fmt::format("{}", v); };
  for (const auto& day : history.days) {
    const auto date = format_date(day.date);
    for (std::size_t z = 0; z < history.zones.size(); ++z) {
      for (int h = 0; h < 24; ++h) {
        const std::size_t slot = z * 24 + static_cast<std::size_t>(h);
        file.print("{},{},{},{},{}\n", date, history.zones[z], h, cell(day.da[slot]), cell(day.rt[slot]));
      }
    }
  }
}

PriceHistory synthesize_history(std::span<const std::string> zones, std::size_t days, std::uint64_t seed,
                                const PriceBounds& bounds, Date first_day) {
  validate(bounds);
  PriceHistory h;
  h.bounds = bounds;
  h.zones.assign(zones.begin(), zones.end());
  std::sort(h.zones.begin(), h.zones.end());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> da_noise(0.0, 4.0);
  std::normal_distribution<double> rt_noise(0.0, 8.0);
  auto cents = [&](double v) { return std::clamp(std::round(v * 100.0) / 100.0, bounds.lower + 0.01, bounds.upper - 0.01); };
  for (std::size_t d = 0; d < days; ++d) {
    HistoryDay day;
    day.date = first_day + std::chrono::days{static_cast<int>(d)};
    for (std::size_t z = 0; z < h.zones.size(); ++z) {
      for (int hr = 0; hr < 24; ++hr) {
        const double shape = 12.0 * std::sin(2.0 * std::numbers::pi * (hr - 8) / 24.0);
        const double da = cents(35.0 + shape + 3.0 * static_cast<double>(z) + da_noise(rng));
        // Persistent per (zone, hour) premium: the learnable part of the spread.
        const double premium = 3.0 * std::sin(static_cast<double>(hr) + 1.7 * static_cast<double>(z));
        const double rt = cents(da + premium + rt_noise(rng));
        day.da.push_back(da);
        day.rt.push_back(rt);
      }
    }
    h.days.push_back(std::move(day));
  }
  return h;
}

SharpeRatio sharpe(std::span<const double> returns) {
  const std::size_t T = returns.size();
  if (T < 2) return {std::nullopt, "fewer than two returns"};
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(T);
  double ss = 0.0;
  for (double r : returns) ss += (r - mean) * (r - mean);
  const double sd = std::sqrt(ss / static_cast<double>(T - 1));
  if (!(sd > 0.0)) return {std::nullopt, "zero variance"};
  return {std::sqrt(static_cast<double>(T)) * mean / sd, {}};
}

BacktestReport run_backtest(Policy& policy, const PriceHistory& history, const BacktestOptions& options) {
  if (!(options.budget > 0.0)) throw std::invalid_argument("backtest budget must be positive");
  std::vector<std::size_t> complete;
  for (std::size_t d = 0; d < history.days.size(); ++d) {
    if (history.days[d].complete) complete.push_back(d);
  }
  if (options.lag_days >= complete.size()) {
    throw RefusalError(fmt::format("observation lag of {} days needs more than {} complete days", options.lag_days,
                                   complete.size()));
  }

  BacktestReport report;
  report.policy = policy.name();
  report.budget = options.budget;
  report.rho = options.rho;
  report.skipped_incomplete = history.days.size() - complete.size();

  std::vector<MarketDay> prices;
  prices.reserve(complete.size());
  for (std::size_t d : complete) prices.push_back(history.translated(d));

  double running = 0.0;
  for (std::size_t i = 0; i < complete.size(); ++i) {
    const Date date = history.days[complete[i]].date;
    if (options.test_end && date > *options.test_end) break;
    if (i >= options.lag_days) policy.observe(prices[i - options.lag_days]);
    BidVector bid = policy.next_bid();
    if (bid.size() != history.options()) {
      throw StructuralError(fmt::format("policy bid has {} options, history has {}", bid.size(), history.options()));
    }
    if (options.test_start && date < *options.test_start) {
      ++report.warmup_days;
    } else {
      const double profit = settle(bid, prices[i]).total;
      running += profit;
      report.dates.push_back(date);
      report.profit.push_back(profit);
      report.cumulative.push_back(running);
      report.returns.push_back(profit / options.budget);
    }
    if (options.record_bids) report.bids.push_back(std::move(bid));
  }
  report.sharpe = sharpe(report.returns);
  return report;
}

std::string report_csv(const BacktestReport& report) {
  std::string out = "day,profit,cum_profit\n";
  for (std::size_t i = 0; i < report.dates.size(); ++i) {
    out += fmt::format("{},{},{}\n", format_date(report.dates[i]), report.profit[i], report.cumulative[i]);
  }
  return out;
}

void write_report_csv(const BacktestReport& report, const std::string& path) {
  auto file = fmt::output_file(path);
  file.print("{}", report_csv(report));
}

nlohmann::json report_summary(const BacktestReport& report) {
  nlohmann::json j;
  j["policy"] = report.policy;
  j["B"] = report.budget;
  j["rho"] = report.rho ? nlohmann::json(*report.rho) : nlohmann::json(nullptr);
  j["total_profit"] = report.total_profit();
  j["sharpe"] = report.sharpe.value ? nlohmann::json(*report.sharpe.value) : nlohmann::json(nullptr);
  if (!report.sharpe.value) j["sharpe_note"] = report.sharpe.reason;
  j["days"] = report.dates.size();
  return j;
}

std::vector<SweepRow> budget_sweep(const RiskPolicyFactory& factory, const PriceHistory& history,
                                   std::span<const double> budgets, std::span<const double> rhos,
                                   const BacktestOptions& options, std::size_t threads) {
  std::vector<SweepRow> rows(budgets.size() * rhos.size());
  parallel_for(rows.size(), threads, [&](std::size_t cell) {
    const double budget = budgets[cell / rhos.size()];
    const double rho = rhos[cell % rhos.size()];
    auto policy = factory(history.options(), budget, rho);
    BacktestOptions opt = options;
    opt.budget = budget;
    opt.rho = rho;
    opt.record_bids = true;
    const auto report = run_backtest(*policy, history, opt);
    SweepRow row{budget, rho, report.total_profit(), report.sharpe, true};
    for (const auto& bid : report.bids) row.feasible = row.feasible && bid.feasible();
    rows[cell] = std::move(row);
  });
  return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, const std::string& path) {
  auto file = fmt::output_file(path);
  file.print("B,rho,profit,sharpe\n");
  for (const auto& r : rows) {
    file.print("{},{},{},{}\n", r.budget, r.rho, r.profit, r.sharpe.value ? fmt::format("{}", *r.sharpe.value) : "");
  }
}

}  // namespace vbid
