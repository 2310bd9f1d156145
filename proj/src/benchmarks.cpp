#include "vbid/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <spdlog/spdlog.h>

namespace vbid {

std::vector<double> project_to_feasible(std::span<const double> x, double budget) {
  if (!(budget > 0.0)) throw std::invalid_argument("projection needs a positive budget");
  std::vector<double> y(x.begin(), x.end());
  double sum = 0.0;
  for (double& v : y) {
    v = std::max(v, 0.0);
    sum += v;
  }
  if (sum <= budget) return y;

  // Threshold tau with sum_i max(y_i - tau, 0) = budget.
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    prefix += sorted[j];
    const double candidate = (prefix - budget) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) tau = candidate;
  }
  for (double& v : y) v = std::max(v - tau, 0.0);
  return y;
}

namespace {

// Greedy allocation in the given order: each option costs `price[k]`.
BidVector greedy_allocate(std::span<const std::size_t> order, std::span<const double> price, std::size_t options,
                          double budget, GreedyRule rule) {
  BidVector out = BidVector::zeros(options, budget);
  double remaining = budget;
  for (std::size_t k : order) {
    if (remaining <= 0.0) break;
    const double p = price[k];
    if (!(p > 0.0)) continue;
    if (p > remaining) {
      if (rule == GreedyRule::StopAtFirstMiss) break;
      continue;
    }
    out.x[k] = p;
    remaining -= p;
  }
  return out;
}

std::vector<std::size_t> rank_descending(std::span<const double> score, std::span<const std::size_t> candidates) {
  std::vector<std::size_t> order(candidates.begin(), candidates.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

}  // namespace

BidVector ucbid_gr_step(std::span<const double> avg_spread, std::span<const double> avg_rt, double budget,
                        GreedyRule rule) {
  if (avg_spread.size() != avg_rt.size()) throw StructuralError("spread and RT averages differ in length");
  std::vector<std::size_t> profitable;
  for (std::size_t k = 0; k < avg_spread.size(); ++k) {
    if (avg_spread[k] > 0.0) profitable.push_back(k);
  }
  const auto order = rank_descending(avg_spread, profitable);
  std::vector<double> price(avg_rt.size());
  for (std::size_t k = 0; k < price.size(); ++k) price[k] = std::max(avg_rt[k], 0.0);
  return greedy_allocate(order, price, avg_spread.size(), budget, rule);
}

UcbidGrPolicy::UcbidGrPolicy(std::size_t options, double budget, GreedyRule rule)
    : sum_spread_(options, 0.0), sum_rt_(options, 0.0), budget_(budget), rule_(rule) {}

void UcbidGrPolicy::observe(const MarketDay& day) {
  validate(day);
  if (day.size() != sum_rt_.size()) throw StructuralError("observation size does not match the policy");
  for (std::size_t k = 0; k < day.size(); ++k) {
    sum_spread_[k] += day.rt[k] - day.da[k];
    sum_rt_[k] += day.rt[k];
  }
  ++days_;
}

BidVector UcbidGrPolicy::next_bid() {
  if (days_ == 0) return BidVector::zeros(sum_rt_.size(), budget_);
  const double n = static_cast<double>(days_);
  std::vector<double> spread(sum_spread_.size());
  std::vector<double> rt(sum_rt_.size());
  for (std::size_t k = 0; k < spread.size(); ++k) {
    spread[k] = sum_spread_[k] / n;
    rt[k] = sum_rt_[k] / n;
  }
  return ucbid_gr_step(spread, rt, budget_, rule_);
}

BidVector sa_step(const BidVector& x, const MarketDay& observed, std::size_t t, const SaConfig& cfg) {
  if (t < 2) return x;
  validate(observed);
  if (observed.size() != x.size()) throw StructuralError("observation size does not match the bid vector");
  const double steps = static_cast<double>(t - 1);
  const double a_t = cfg.a / std::pow(steps, cfg.a_exponent);
  const double c_t = cfg.c / std::pow(steps, cfg.c_exponent);
  std::vector<double> next(x.x);
  for (std::size_t k = 0; k < next.size(); ++k) {
    const double lambda = observed.da[k];
    const double up = x.x[k] + c_t >= lambda ? 1.0 : 0.0;
    const double down = x.x[k] - c_t >= lambda ? 1.0 : 0.0;
    const double grad = (up - down) / c_t;
    next[k] += a_t * (observed.rt[k] - lambda) * grad;
  }
  return BidVector(project_to_feasible(next, x.budget), x.budget);
}

SaPolicy::SaPolicy(std::size_t options, double budget, SaConfig cfg)
    : x_(BidVector::zeros(options, budget)), cfg_(cfg) {
  if (!(cfg.a > 0.0) || !(cfg.c > 0.0)) throw std::invalid_argument("SA step constants must be positive");
}

void SaPolicy::observe(const MarketDay& day) {
  ++observed_;
  x_ = sa_step(x_, day, observed_ + 1, cfg_);
}

// ---------------------------------------------------------------------------
// SVM-GR

bool LinearClassifier::predict(std::span<const double> features) const {
  if (constant_label || w.empty()) return b > 0.0;
  double s = b;
  for (std::size_t i = 0; i < features.size(); ++i) s += w[i] * features[i];
  return s > 0.0;
}

bool SvmGrModel::any_degenerate() const {
  return std::any_of(classifiers.begin(), classifiers.end(), [](const auto& c) { return c.degenerate; });
}

double empirical_quantile(std::vector<double> sample, double q) {
  if (sample.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(sample.begin(), sample.end());
  const double pos = q * static_cast<double>(sample.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sample.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sample[lo] + frac * (sample[hi] - sample[lo]);
}

namespace {

// Spreads of all options over `lookback` days ending at `last` (inclusive),
// oldest first, option-minor.
std::vector<double> window_features(std::span<const MarketDay> days, std::size_t last, std::size_t lookback) {
  const std::size_t K = days[last].size();
  std::vector<double> f;
  f.reserve(K * lookback);
  for (std::size_t d = last + 1 - lookback; d <= last; ++d) {
    for (std::size_t k = 0; k < K; ++k) f.push_back(days[d].rt[k] - days[d].da[k]);
  }
  return f;
}

void standardize(std::vector<double>& f, const SvmGrModel& m) {
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = (f[i] - m.feature_mean[i]) / m.feature_scale[i];
}

// Pegasos-style subgradient descent on the L2-regularised hinge loss; the
// bias is a regularised constant feature.
LinearClassifier train_hinge(const std::vector<std::vector<double>>& x, const std::vector<int>& y, double l2,
                             std::size_t epochs, std::uint64_t seed) {
  LinearClassifier c;
  const std::size_t n = x.size();
  const std::size_t d = x.front().size();
  const int positives = static_cast<int>(std::count(y.begin(), y.end(), 1));
  if (positives == 0 || positives == static_cast<int>(n)) {
    c.degenerate = true;
    c.constant_label = true;
    c.b = positives == 0 ? -1.0 : 1.0;
    return c;
  }
  c.w.assign(d, 0.0);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::size_t step = 0;
  for (std::size_t e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t idx : order) {
      ++step;
      const double eta = 1.0 / (l2 * static_cast<double>(step));
      double margin = c.b;
      for (std::size_t i = 0; i < d; ++i) margin += c.w[i] * x[idx][i];
      margin *= y[idx];
      const double shrink = 1.0 - eta * l2;
      for (double& wi : c.w) wi *= shrink;
      c.b *= shrink;
      if (margin < 1.0) {
        for (std::size_t i = 0; i < d; ++i) c.w[i] += eta * y[idx] * x[idx][i];
        c.b += eta * y[idx];
      }
    }
  }
  return c;
}

}  // namespace

SvmGrModel svm_gr_train(std::span<const MarketDay> days, const SvmGrConfig& cfg) {
  if (cfg.lookback_days < 1) throw std::invalid_argument("SVM-GR lookback must be at least one day");
  if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) throw std::invalid_argument("confidence must be in (0,1)");
  const std::size_t first_target = cfg.lookback_days + cfg.gap_days;
  if (days.size() <= first_target) {
    throw std::invalid_argument("SVM-GR training span is shorter than the feature window plus one target day");
  }
  const std::size_t K = days.front().size();
  for (const auto& d : days) {
    validate(d);
    if (d.size() != K) throw StructuralError("training days disagree on the number of options");
  }

  SvmGrModel m;
  m.options = K;
  m.lookback_days = cfg.lookback_days;

  std::vector<std::vector<double>> features;
  for (std::size_t target = first_target; target < days.size(); ++target) {
    features.push_back(window_features(days, target - cfg.gap_days - 1, cfg.lookback_days));
  }
  const std::size_t n = features.size();
  const std::size_t dim = features.front().size();
  m.feature_mean.assign(dim, 0.0);
  m.feature_scale.assign(dim, 1.0);
  for (const auto& f : features) {
    for (std::size_t i = 0; i < dim; ++i) m.feature_mean[i] += f[i] / static_cast<double>(n);
  }
  for (std::size_t i = 0; i < dim; ++i) {
    double ss = 0.0;
    for (const auto& f : features) ss += (f[i] - m.feature_mean[i]) * (f[i] - m.feature_mean[i]);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.feature_scale[i] = sd > 0.0 ? sd : 1.0;
  }
  for (auto& f : features) standardize(f, m);

  m.classifiers.resize(K);
  m.avg_profit.assign(K, 0.0);
  m.bid_level.assign(K, 0.0);
  m.training_accuracy.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<int> labels(n);
    for (std::size_t s = 0; s < n; ++s) {
      const auto& day = days[first_target + s];
      labels[s] = day.rt[k] - day.da[k] > 0.0 ? 1 : -1;
    }
    m.classifiers[k] = train_hinge(features, labels, cfg.l2, cfg.epochs, cfg.seed + k);

    double profit = 0.0;
    std::size_t chosen = 0;
    std::size_t correct = 0;
    for (std::size_t s = 0; s < n; ++s) {
      const bool pred = m.classifiers[k].predict(features[s]);
      if (pred == (labels[s] == 1)) ++correct;
      if (pred) {
        const auto& day = days[first_target + s];
        profit += std::abs(day.rt[k] - day.da[k]);
        ++chosen;
      }
    }
    m.avg_profit[k] = chosen ? profit / static_cast<double>(chosen) : 0.0;
    m.training_accuracy[k] = static_cast<double>(correct) / static_cast<double>(n);

    std::vector<double> da(days.size());
    for (std::size_t d = 0; d < days.size(); ++d) da[d] = days[d].da[k];
    m.bid_level[k] = empirical_quantile(std::move(da), cfg.confidence);
  }
  if (m.any_degenerate()) spdlog::debug("SVM-GR: some options had single-class training labels");
  return m;
}

SvmGrBid svm_gr_step(const SvmGrModel& model, std::span<const MarketDay> window, double budget, GreedyRule rule) {
  SvmGrBid out{BidVector::zeros(model.options, budget), false};
  if (window.size() < model.lookback_days) {
    out.short_window = true;
    return out;
  }
  auto f = window_features(window, window.size() - 1, model.lookback_days);
  standardize(f, model);
  std::vector<std::size_t> profitable;
  for (std::size_t k = 0; k < model.options; ++k) {
    if (model.classifiers[k].predict(f)) profitable.push_back(k);
  }
  const auto order = rank_descending(model.avg_profit, profitable);
  out.bid = greedy_allocate(order, model.bid_level, model.options, budget, rule);
  return out;
}

SvmGrPolicy::SvmGrPolicy(std::size_t options, double budget, SvmGrConfig cfg)
    : options_(options), budget_(budget), cfg_(cfg) {
  if (cfg_.training_days <= cfg_.lookback_days + cfg_.gap_days) {
    throw std::invalid_argument("SVM-GR training span must exceed the feature window");
  }
}

void SvmGrPolicy::observe(const MarketDay& day) {
  validate(day);
  if (day.size() != options_) throw StructuralError("observation size does not match the policy");
  history_.push_back(day);
  ++since_fit_;
  if (history_.size() >= cfg_.training_days && (!trained_ || since_fit_ >= cfg_.training_days)) {
    std::span<const MarketDay> all(history_);
    model_ = svm_gr_train(all.subspan(all.size() - cfg_.training_days), cfg_);
    trained_ = true;
    since_fit_ = 0;
  }
}

BidVector SvmGrPolicy::next_bid() {
  if (!trained_) return BidVector::zeros(options_, budget_);
  return svm_gr_step(model_, history_, budget_, cfg_.rule).bid;
}

}  // namespace vbid
