#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ubsb/ablation.hpp"

namespace ubsb::eval {

enum class LiftPolicy { fixed_approval, fixed_default };

std::string_view to_string(LiftPolicy p) noexcept;

struct LiftFold {
  int fold = 0;
  std::size_t n = 0;
  double demo_threshold = 0.0;
  double full_threshold = 0.0;
  /// Full - Demo, per 100 screened applicants in the held-out fold.
  double good_approvals_delta = 0.0;
  double bad_rejections_delta = 0.0;
  /// Fixed default only: no approval set met the target on the training portion.
  bool demo_unachievable = false;
  bool full_unachievable = false;

  nlohmann::json to_json() const;
};

struct Interval {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct LiftReport {
  models::Family family = models::Family::gbdt_xgb;
  LiftPolicy policy = LiftPolicy::fixed_approval;
  /// r (approval percent) or t (default percent).
  double level = 0.0;
  std::vector<LiftFold> folds;
  /// Unweighted means of the per-fold deltas.
  double mean_good_approvals = 0.0;
  double mean_bad_rejections = 0.0;
  /// Pooled per-100 deltas with stratified percentile bootstrap intervals.
  Interval good_approvals;
  Interval bad_rejections;
  int bootstrap = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Scores are default probabilities; approval means score <= threshold.
/// Nearest-rank threshold approving r percent of a sorted sample (+inf at r >= 100).
double approval_threshold(std::vector<double> train_scores, double r_percent);

struct DefaultThreshold {
  double threshold = 0.0;
  bool achievable = true;
};

/// Largest approval set (lowest scores first, whole tie groups) whose default
/// rate is <= t percent. Unachievable targets approve nobody (-inf).
DefaultThreshold default_rate_threshold(std::span<const double> train_scores, std::span<const int> train_labels,
                                        double t_percent);

/// Per fold: thresholds from the other folds' out-of-fold scores, applied to
/// the held-out fold. `bootstrap` = 0 skips the intervals.
LiftReport lift_fixed_approval(const OofPredictions& oof, double r_percent, int bootstrap, std::uint64_t seed);
LiftReport lift_fixed_default(const OofPredictions& oof, double t_percent, int bootstrap, std::uint64_t seed);

}  // namespace ubsb::eval
