#include "ubsb/lift.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ubsb/metrics.hpp"

namespace ubsb::eval {

std::string_view to_string(LiftPolicy p) noexcept {
  return p == LiftPolicy::fixed_approval ? "fixed_approval" : "fixed_default";
}

nlohmann::json LiftFold::to_json() const {
  return {{"fold", fold},
          {"n", n},
          {"demo_threshold", demo_threshold},
          {"full_threshold", full_threshold},
          {"good_approvals_delta", good_approvals_delta},
          {"bad_rejections_delta", bad_rejections_delta},
          {"demo_unachievable", demo_unachievable},
          {"full_unachievable", full_unachievable}};
}

nlohmann::json LiftReport::to_json() const {
  nlohmann::json f = nlohmann::json::array();
  for (const auto& x : folds) f.push_back(x.to_json());
  auto interval = [](const Interval& i) { return nlohmann::json{{"estimate", i.estimate}, {"lo", i.lo}, {"hi", i.hi}}; };
  return {{"family", models::to_string(family)},
          {"policy", to_string(policy)},
          {"level_percent", level},
          {"mean_good_approvals_delta", mean_good_approvals},
          {"mean_bad_rejections_delta", mean_bad_rejections},
          {"good_approvals_delta", interval(good_approvals)},
          {"bad_rejections_delta", interval(bad_rejections)},
          {"bootstrap", bootstrap},
          {"seed", seed},
          {"folds", f}};
}

double approval_threshold(std::vector<double> train_scores, double r_percent) {
  if (!(r_percent > 0.0 && r_percent <= 100.0)) throw std::invalid_argument("approval rate must be in (0, 100]");
  if (train_scores.empty()) throw std::invalid_argument("approval threshold needs training scores");
  if (r_percent >= 100.0) return std::numeric_limits<double>::infinity();
  std::sort(train_scores.begin(), train_scores.end());
  const double n = static_cast<double>(train_scores.size());
  auto k = static_cast<std::size_t>(std::ceil(r_percent / 100.0 * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, train_scores.size());
  return train_scores[k - 1];
}

DefaultThreshold default_rate_threshold(std::span<const double> train_scores, std::span<const int> train_labels,
                                        double t_percent) {
  if (!(t_percent >= 0.0 && t_percent < 100.0)) throw std::invalid_argument("default rate must be in [0, 100)");
  if (train_scores.size() != train_labels.size() || train_scores.empty()) {
    throw std::invalid_argument("default threshold needs matching scores and labels");
  }
  std::vector<std::size_t> order(train_scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return train_scores[a] < train_scores[b]; });
  const double target = t_percent / 100.0;
  DefaultThreshold best{-std::numeric_limits<double>::infinity(), false};
  std::size_t approved = 0, bad = 0;
  std::size_t i = 0;
  const std::size_t n = order.size();
  while (i < n) {
    const double v = train_scores[order[i]];
    while (i < n && train_scores[order[i]] == v) {
      bad += train_labels[order[i]] ? 1 : 0;
      ++approved;
      ++i;
    }
    if (static_cast<double>(bad) <= target * static_cast<double>(approved) + 1e-12) {
      best = {i == n ? std::numeric_limits<double>::infinity() : v, true};
    }
  }
  return best;
}

namespace {

template <typename ThresholdFn>
LiftReport run_lift(const OofPredictions& oof, LiftPolicy policy, double level, int bootstrap, std::uint64_t seed,
                    ThresholdFn threshold_for) {
  oof.validate();
  if (bootstrap < 0) throw std::invalid_argument("bootstrap count must be >= 0");
  LiftReport rep;
  rep.family = oof.family;
  rep.policy = policy;
  rep.level = level;
  rep.bootstrap = bootstrap;
  rep.seed = seed;
  const int k = oof.n_folds();
  const std::size_t n = oof.size();
  std::vector<int> approve_demo(n), approve_full(n);
  for (int f = 0; f < k; ++f) {
    std::vector<double> demo_train, full_train;
    std::vector<int> y_train;
    for (std::size_t i = 0; i < n; ++i) {
      if (oof.folds[i] == f) continue;
      demo_train.push_back(oof.demo_score[i]);
      full_train.push_back(oof.full_score[i]);
      y_train.push_back(oof.labels[i]);
    }
    LiftFold lf;
    lf.fold = f;
    const auto [td, ad] = threshold_for(demo_train, y_train);
    const auto [tf, af] = threshold_for(full_train, y_train);
    lf.demo_threshold = td;
    lf.full_threshold = tf;
    lf.demo_unachievable = !ad;
    lf.full_unachievable = !af;
    double good = 0.0, bad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (oof.folds[i] != f) continue;
      ++lf.n;
      approve_demo[i] = oof.demo_score[i] <= td ? 1 : 0;
      approve_full[i] = oof.full_score[i] <= tf ? 1 : 0;
      const int diff = approve_full[i] - approve_demo[i];
      if (oof.labels[i]) {
        bad -= diff;
      } else {
        good += diff;
      }
    }
    lf.good_approvals_delta = 100.0 * good / static_cast<double>(lf.n);
    lf.bad_rejections_delta = 100.0 * bad / static_cast<double>(lf.n);
    rep.mean_good_approvals += lf.good_approvals_delta / k;
    rep.mean_bad_rejections += lf.bad_rejections_delta / k;
    rep.folds.push_back(lf);
  }

  auto pooled = [&](bool good_side) {
    return [&, good_side](std::span<const std::size_t> idx) {
      double s = 0.0;
      for (auto i : idx) {
        const int diff = approve_full[i] - approve_demo[i];
        if (good_side && !oof.labels[i]) s += diff;
        if (!good_side && oof.labels[i]) s -= diff;
      }
      return 100.0 * s / static_cast<double>(idx.size());
    };
  };
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  rep.good_approvals.estimate = rep.good_approvals.lo = rep.good_approvals.hi = pooled(true)(all);
  rep.bad_rejections.estimate = rep.bad_rejections.lo = rep.bad_rejections.hi = pooled(false)(all);
  if (bootstrap > 0) {
    const auto g = metrics::bootstrap_ci(oof.labels, pooled(true), bootstrap, seed);
    const auto b = metrics::bootstrap_ci(oof.labels, pooled(false), bootstrap, seed);
    rep.good_approvals = {g.estimate, g.lo, g.hi};
    rep.bad_rejections = {b.estimate, b.lo, b.hi};
  }
  return rep;
}

}  // namespace

LiftReport lift_fixed_approval(const OofPredictions& oof, double r_percent, int bootstrap, std::uint64_t seed) {
  if (!(r_percent > 0.0 && r_percent <= 100.0)) throw std::invalid_argument("approval rate must be in (0, 100]");
  return run_lift(oof, LiftPolicy::fixed_approval, r_percent, bootstrap, seed,
                  [&](const std::vector<double>& s, const std::vector<int>&) {
                    return std::pair{approval_threshold(s, r_percent), true};
                  });
}

LiftReport lift_fixed_default(const OofPredictions& oof, double t_percent, int bootstrap, std::uint64_t seed) {
  if (!(t_percent >= 0.0 && t_percent < 100.0)) throw std::invalid_argument("default rate must be in [0, 100)");
  return run_lift(oof, LiftPolicy::fixed_default, t_percent, bootstrap, seed,
                  [&](const std::vector<double>& s, const std::vector<int>& y) {
                    const auto d = default_rate_threshold(s, y, t_percent);
                    return std::pair{d.threshold, d.achievable};
                  });
}

}  // namespace ubsb::eval
