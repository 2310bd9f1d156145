#pragma once

// Trading options, the demand/supply translation and daily settlement.
//
// Every bid and price handled by the learning code is in "translated" form:
// a virtual demand bid x becomes x - l, a virtual supply bid x becomes u - x,
// where [l, u] are the ISO's DA price bounds. After translation both sides
// share one payoff rule, (pi' - lambda') * 1{x' >= lambda'}.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vbid {

/// Thrown when inputs disagree on shape (vector lengths, option counts, ...).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an oracle or harness declines an input it cannot handle exactly.
class RefusalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Side { Demand, Supply };

std::string to_string(Side side);

struct OptionId {
  std::string zone;
  int hour = 0;  // 0..23
  Side side = Side::Demand;

  bool operator==(const OptionId&) const = default;
};

struct PriceBounds {
  double lower = 0.0;
  double upper = 1000.0;

  /// Width of the translated price range, u - l.
  double width() const { return upper - lower; }
};

/// Throws std::invalid_argument unless lower < upper.
void validate(const PriceBounds& bounds);

/// Raw price or bid to translated form.
double translate(double raw, Side side, const PriceBounds& bounds);

/// Inverse of translate.
double untranslate(double translated, Side side, const PriceBounds& bounds);

/// One day's translated DA (lambda) and RT (pi) prices, one entry per option.
struct MarketDay {
  std::vector<double> da;
  std::vector<double> rt;

  std::size_t size() const { return da.size(); }
};

/// Throws StructuralError if da and rt disagree in length.
void validate(const MarketDay& day);

/// Nonnegative translated bids with an aggregate budget ||x||_1 <= budget.
/// A zero entry means the option is not bid.
struct BidVector {
  std::vector<double> x;
  double budget = 0.0;

  BidVector() = default;
  BidVector(std::vector<double> bids, double budget_) : x(std::move(bids)), budget(budget_) {}

  static BidVector zeros(std::size_t options, double budget) {
    return BidVector(std::vector<double>(options, 0.0), budget);
  }

  std::size_t size() const { return x.size(); }
  double l1() const;

  /// x >= 0 and ||x||_1 <= budget * (1 + rel_tol).
  bool feasible(double rel_tol = 1e-12) const;
};

struct Settlement {
  double total = 0.0;
  std::vector<double> per_option;
};

/// Payoff of bidding x against one day's translated prices:
/// sum_k (pi_k - lambda_k) * 1{x_k >= lambda_k}. Ties clear.
Settlement settle(std::span<const double> bids, const MarketDay& day);
inline Settlement settle(const BidVector& bid, const MarketDay& day) { return settle(bid.x, day); }

/// Zone-major, hour-minor, side-last ordering. Index of (zone z, hour h, side s)
/// is (z * 24 + h) * 2 + (s == Supply). This ordering is the column order of all
/// reports and must not change.
std::vector<OptionId> enumerate_options(std::span<const std::string> zones);

constexpr std::size_t option_index(std::size_t zone_index, int hour, Side side) {
  return (zone_index * 24 + static_cast<std::size_t>(hour)) * 2 + (side == Side::Supply ? 1 : 0);
}

}  // namespace vbid
