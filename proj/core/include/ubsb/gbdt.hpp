#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ubsb/encode.hpp"
#include "ubsb/tree.hpp"

namespace ubsb::models {

enum class GbdtPreset { xgb_like, lgbm_like, cat_like };

std::string_view to_string(GbdtPreset p) noexcept;
GbdtPreset parse_gbdt_preset(std::string_view text);

struct GbdtParams {
  GbdtPreset preset = GbdtPreset::xgb_like;
  double learning_rate = 0.05;
  /// Depth cap; values <= 0 mean unlimited (leafwise growth only).
  int max_depth = 6;
  /// Leaf cap for leafwise growth.
  int max_leaves = 31;
  int n_rounds_max = 500;
  int early_stopping_rounds = 100;
  double row_subsample = 1.0;
  double col_subsample = 1.0;
  double l1_alpha = 0.0;
  double l2_lambda = 1.0;
  double min_gain_gamma = 0.0;
  /// Minimum hessian sum per child.
  double min_child_weight = 1.0;
  bool goss = false;
  double goss_top = 0.2;
  double goss_rest = 0.1;
  bool balanced = true;
  int max_bins = 255;
  std::uint64_t seed = 0;

  static GbdtParams for_preset(GbdtPreset preset);
  /// Throws std::invalid_argument on out-of-range values.
  void validate() const;
  nlohmann::json to_json() const;
  static GbdtParams from_json(const nlohmann::json& j);
};

struct ClassWeights {
  double w_pos = 1.0;
  double w_neg = 1.0;
};

/// Balanced weights: w_pos = n / (2 n_pos), w_neg = n / (2 n_neg).
ClassWeights class_weights(std::span<const int> labels);

struct GradHess {
  double g = 0.0;
  double h = 0.0;
};

/// Logistic loss derivatives in the margin: g = w (p - y), h = w p (1 - p).
/// `prob` is clamped to [1e-7, 1 - 1e-7].
GradHess logistic_grad_hess(double prob, int label, double weight);

double soft_threshold(double g, double l1) noexcept;
double split_gain(double GL, double HL, double GR, double HR, double l1, double l2, double gamma) noexcept;
/// -T(G) / (H + l2), zero when the denominator vanishes.
double leaf_weight(double G, double H, double l1, double l2) noexcept;

double sigmoid(double margin) noexcept;
double clamp_prob(double p) noexcept;

struct GbdtModel {
  GbdtParams params;
  double base_margin = 0.0;
  std::vector<TreeModel> trees;
  /// Validation AUC after each round (empty without validation data).
  std::vector<double> trace;
  /// Number of leading trees used for prediction.
  int best_iteration = 0;
  int rounds_trained = 0;

  double margin(const double* row, int n_trees) const;
  /// Probabilities from the first `best_iteration` trees.
  std::vector<double> predict_proba(const encode::FeatureMatrix& x) const;
  std::vector<double> predict_proba(const encode::FeatureMatrix& x, int n_trees) const;

  nlohmann::json to_json() const;
  static GbdtModel from_json(const nlohmann::json& j);
};

/// Histogram boosting on the logistic loss. With validation data, trains until
/// validation AUC has not improved for `early_stopping_rounds` rounds and sets
/// best_iteration to the argmax (earliest on ties). Without it, trains exactly
/// n_rounds_max rounds.
GbdtModel fit_gbdt(const encode::FeatureMatrix& train, std::span<const int> labels, const GbdtParams& params,
                   const encode::FeatureMatrix* valid = nullptr, std::span<const int> valid_labels = {});

}  // namespace ubsb::models
