#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>

#include "vbid/market_model.hpp"

namespace vbid {

/// A bidding policy: a stateful rule mapping the observed history to the next
/// day's bid. The harness decides which days the policy gets to see (and when),
/// so observation lag is not the policy's concern.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string name() const = 0;

  /// Feed one day of translated prices, in chronological order.
  virtual void observe(const MarketDay& day) = 0;

  /// Bid for the next trading day given everything observed so far.
  virtual BidVector next_bid() = 0;
};

/// Builds a fresh policy for `options` trading options and budget `budget`.
using PolicyFactory = std::function<std::unique_ptr<Policy>(std::size_t options, double budget)>;

/// Never bids.
class ZeroPolicy final : public Policy {
 public:
  ZeroPolicy(std::size_t options, double budget) : options_(options), budget_(budget) {}
  std::string name() const override { return "zero"; }
  void observe(const MarketDay&) override {}
  BidVector next_bid() override { return BidVector::zeros(options_, budget_); }

 private:
  std::size_t options_;
  double budget_;
};

/// Submits the same bid every day.
class ConstantPolicy final : public Policy {
 public:
  ConstantPolicy(BidVector bid, std::string label = "constant") : bid_(std::move(bid)), label_(std::move(label)) {}
  std::string name() const override { return label_; }
  void observe(const MarketDay&) override {}
  BidVector next_bid() override { return bid_; }

 private:
  BidVector bid_;
  std::string label_;
};

}  // namespace vbid
