#include "vbid/payoff_stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vbid {

namespace {
constexpr int kSnapshotVersion = 1;
}

BreakpointTable::BreakpointTable() : lambda_{0.0}, r_{0.0}, v_{0.0} {}

void BreakpointTable::update(double da, double rt) {
  const double nu = rt - da;
  const double t = static_cast<double>(days_ + 1);
  const double keep = (t - 1.0) / t;

  // A non-positive DA price is cleared by every bid, including 0, so it
  // behaves exactly like a breakpoint at 0 placed after the sentinel.
  const double at = std::max(da, 0.0);
  const auto pos = static_cast<std::size_t>(std::lower_bound(lambda_.begin() + 1, lambda_.end(), at) - lambda_.begin());
  // Equal breakpoints already carry the payoffs of earlier duplicates; the new
  // entry is placed after them and starts from their value so that every
  // r_[j] is exactly rbar(lambda_[j]).
  const auto ins = static_cast<std::size_t>(std::upper_bound(lambda_.begin() + 1, lambda_.end(), at) - lambda_.begin());

  lambda_.insert(lambda_.begin() + static_cast<std::ptrdiff_t>(ins), at);
  r_.insert(r_.begin() + static_cast<std::ptrdiff_t>(ins), r_[ins - 1]);
  v_.insert(v_.begin() + static_cast<std::ptrdiff_t>(ins), v_[ins - 1]);

  for (std::size_t i = 0; i < pos; ++i) {
    r_[i] *= keep;
    v_[i] *= keep;
  }
  for (std::size_t i = pos; i < r_.size(); ++i) {
    r_[i] = keep * r_[i] + nu / t;
    v_[i] = keep * v_[i] + nu * nu / t;
  }
  ++days_;
}

std::size_t BreakpointTable::segment(double x) const {
  if (x < 0.0) return 0;
  auto it = std::upper_bound(lambda_.begin(), lambda_.end(), x);
  return static_cast<std::size_t>(it - lambda_.begin()) - 1;
}

double BreakpointTable::avg_payoff(double x) const { return r_[segment(x)]; }

double BreakpointTable::avg_sq_payoff(double x) const { return v_[segment(x)]; }

double BreakpointTable::objective_at(std::size_t j, double rho) const {
  const double r = r_[j];
  if (rho == 0.0 || days_ < 2) return r;
  const double t = static_cast<double>(days_);
  return r + rho * (t / (t - 1.0)) * (r * r - v_[j]);
}

double BreakpointTable::mean_var_payoff(double x, double rho) const {
  if (rho < 0.0) throw std::domain_error("risk weight rho must be nonnegative");
  return objective_at(segment(x), rho);
}

bool BreakpointTable::consistent() const {
  if (lambda_.size() != days_ + 1 || r_.size() != lambda_.size() || v_.size() != lambda_.size()) return false;
  if (lambda_[0] != 0.0 || r_[0] != 0.0 || v_[0] != 0.0) return false;
  return std::is_sorted(lambda_.begin(), lambda_.end());
}

bool BreakpointTable::within(const PayoffBounds& bounds, double tol) const {
  const double vmax = std::max(bounds.l * bounds.l, bounds.u * bounds.u);
  for (std::size_t i = 0; i < r_.size(); ++i) {
    if (r_[i] < bounds.l - tol || r_[i] > bounds.u + tol) return false;
    if (v_[i] < -tol || v_[i] > vmax + tol) return false;
  }
  return true;
}

nlohmann::json BreakpointTable::to_json() const {
  return {{"days", days_}, {"lambda", lambda_}, {"r", r_}, {"v", v_}};
}

BreakpointTable BreakpointTable::from_json(const nlohmann::json& j) {
  BreakpointTable out;
  out.days_ = j.at("days").get<std::size_t>();
  out.lambda_ = j.at("lambda").get<std::vector<double>>();
  out.r_ = j.at("r").get<std::vector<double>>();
  out.v_ = j.at("v").get<std::vector<double>>();
  if (!out.consistent()) throw std::invalid_argument("breakpoint table snapshot is inconsistent");
  return out;
}

nlohmann::json snapshot_tables(std::span<const BreakpointTable> tables) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : tables) arr.push_back(t.to_json());
  return {{"format", "vbid-breakpoint-tables"}, {"version", kSnapshotVersion}, {"tables", std::move(arr)}};
}

std::vector<BreakpointTable> restore_tables(const nlohmann::json& snapshot) {
  if (snapshot.value("format", "") != "vbid-breakpoint-tables") {
    throw std::invalid_argument("not a breakpoint table snapshot");
  }
  if (snapshot.at("version").get<int>() != kSnapshotVersion) {
    throw std::invalid_argument("unsupported breakpoint table snapshot version");
  }
  std::vector<BreakpointTable> out;
  for (const auto& j : snapshot.at("tables")) out.push_back(BreakpointTable::from_json(j));
  return out;
}

}  // namespace vbid
