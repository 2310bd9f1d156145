#include "vbid/market_model.hpp"

#include <numeric>

namespace vbid {

std::string to_string(Side side) { return side == Side::Demand ? "demand" : "supply"; }

void validate(const PriceBounds& bounds) {
  if (!(bounds.lower < bounds.upper)) {
    throw std::invalid_argument("price bounds require lower < upper");
  }
}

double translate(double raw, Side side, const PriceBounds& bounds) {
  return side == Side::Demand ? raw - bounds.lower : bounds.upper - raw;
}

double untranslate(double translated, Side side, const PriceBounds& bounds) {
  return side == Side::Demand ? translated + bounds.lower : bounds.upper - translated;
}

void validate(const MarketDay& day) {
  if (day.da.size() != day.rt.size()) {
    throw StructuralError("market day has " + std::to_string(day.da.size()) + " DA prices but " +
                          std::to_string(day.rt.size()) + " RT prices");
  }
}

double BidVector::l1() const { return std::accumulate(x.begin(), x.end(), 0.0); }

bool BidVector::feasible(double rel_tol) const {
  for (double v : x) {
    if (!(v >= 0.0)) return false;
  }
  return l1() <= budget * (1.0 + rel_tol);
}

Settlement settle(std::span<const double> bids, const MarketDay& day) {
  validate(day);
  if (bids.size() != day.size()) {
    throw StructuralError("bid vector has " + std::to_string(bids.size()) + " options, market day has " +
                          std::to_string(day.size()));
  }
  Settlement out;
  out.per_option.resize(bids.size(), 0.0);
  for (std::size_t k = 0; k < bids.size(); ++k) {
    if (bids[k] >= day.da[k]) {
      out.per_option[k] = day.rt[k] - day.da[k];
      out.total += out.per_option[k];
    }
  }
  return out;
}

std::vector<OptionId> enumerate_options(std::span<const std::string> zones) {
  if (zones.empty()) throw std::invalid_argument("option universe needs at least one zone");
  std::vector<OptionId> out;
  out.reserve(zones.size() * 48);
  for (const auto& zone : zones) {
    for (int hour = 0; hour < 24; ++hour) {
      out.push_back({zone, hour, Side::Demand});
      out.push_back({zone, hour, Side::Supply});
    }
  }
  return out;
}

}  // namespace vbid
