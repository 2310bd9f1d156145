#pragma once

// Comparison policies: greedy-by-average (UCBID-GR), Kiefer-Wolfowitz
// stochastic approximation (SA) and a linear-classifier greedy (SVM-GR).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "vbid/policy.hpp"

namespace vbid {

/// Euclidean projection onto {y >= 0, ||y||_1 <= budget}.
std::vector<double> project_to_feasible(std::span<const double> x, double budget);

/// What a greedy allocator does when the next option does not fit.
enum class GreedyRule {
  SkipAndContinue,  // try cheaper options further down the ranking
  StopAtFirstMiss,
};

// ---------------------------------------------------------------------------
// UCBID-GR

/// Options ranked by average translated spread (descending); each option with
/// positive average spread is bid at its average translated RT price (floored
/// at 0) while budget remains.
BidVector ucbid_gr_step(std::span<const double> avg_spread, std::span<const double> avg_rt, double budget,
                        GreedyRule rule = GreedyRule::SkipAndContinue);

class UcbidGrPolicy final : public Policy {
 public:
  UcbidGrPolicy(std::size_t options, double budget, GreedyRule rule = GreedyRule::SkipAndContinue);
  std::string name() const override { return "ucbid-gr"; }
  void observe(const MarketDay& day) override;
  BidVector next_bid() override;

 private:
  std::vector<double> sum_spread_;
  std::vector<double> sum_rt_;
  std::size_t days_ = 0;
  double budget_;
  GreedyRule rule_;
};

// ---------------------------------------------------------------------------
// SA

struct SaConfig {
  double a = 20000.0;        // a_t = a / (t-1)
  double c = 2000.0;         // c_t = c / (t-1)^c_exponent
  double a_exponent = 1.0;
  double c_exponent = 0.25;
};

/// One Kiefer-Wolfowitz step from bid x at step t using the observed day,
/// followed by projection. Returns x unchanged for t < 2.
BidVector sa_step(const BidVector& x, const MarketDay& observed, std::size_t t, const SaConfig& cfg);

class SaPolicy final : public Policy {
 public:
  SaPolicy(std::size_t options, double budget, SaConfig cfg = {});
  std::string name() const override { return "sa"; }
  void observe(const MarketDay& day) override;
  BidVector next_bid() override { return x_; }

 private:
  BidVector x_;
  SaConfig cfg_;
  std::size_t observed_ = 0;
};

// ---------------------------------------------------------------------------
// SVM-GR

struct SvmGrConfig {
  std::size_t lookback_days = 6;   // feature window length
  std::size_t gap_days = 1;        // days between window end and target day
  double confidence = 0.95;        // DA-price quantile used as the bid level
  std::size_t training_days = 365; // observations needed before the first fit
  double l2 = 1e-3;                // hinge-loss regularisation
  std::size_t epochs = 20;
  std::uint64_t seed = 12345;
  GreedyRule rule = GreedyRule::SkipAndContinue;
};

/// Per-option linear classifier on standardised spread windows.
struct LinearClassifier {
  std::vector<double> w;
  double b = 0.0;
  bool degenerate = false;   // single-class training labels
  bool constant_label = false;

  bool predict(std::span<const double> features) const;
};

struct SvmGrModel {
  std::size_t options = 0;
  std::size_t lookback_days = 0;
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::vector<LinearClassifier> classifiers;
  std::vector<double> avg_profit;
  std::vector<double> bid_level;
  std::vector<double> training_accuracy;

  bool any_degenerate() const;
};

/// Empirical quantile (linear interpolation between order statistics).
double empirical_quantile(std::vector<double> sample, double q);

/// Fit from a chronological run of observed days.
SvmGrModel svm_gr_train(std::span<const MarketDay> days, const SvmGrConfig& cfg);

struct SvmGrBid {
  BidVector bid;
  bool short_window = false;
};

/// `window` holds the most recent observed days, oldest first; only the last
/// lookback_days are used.
SvmGrBid svm_gr_step(const SvmGrModel& model, std::span<const MarketDay> window, double budget,
                     GreedyRule rule = GreedyRule::SkipAndContinue);

class SvmGrPolicy final : public Policy {
 public:
  SvmGrPolicy(std::size_t options, double budget, SvmGrConfig cfg = {});
  std::string name() const override { return "svm-gr"; }
  void observe(const MarketDay& day) override;
  BidVector next_bid() override;

  const SvmGrModel* model() const { return trained_ ? &model_ : nullptr; }

 private:
  std::vector<MarketDay> history_;
  SvmGrModel model_;
  bool trained_ = false;
  std::size_t since_fit_ = 0;
  std::size_t options_;
  double budget_;
  SvmGrConfig cfg_;
};

}  // namespace vbid
