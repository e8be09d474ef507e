#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "ubsb/encode.hpp"

namespace ubsb::models {

struct LogregParams {
  /// Elastic-net mixing: 1 is pure l1, 0 pure l2.
  double alpha_mix = 0.5;
  double lambda = 1e-3;
  double tol = 1e-4;
  int max_iter = 100;
  bool balanced = true;

  void validate() const;
  nlohmann::json to_json() const;
  static LogregParams from_json(const nlohmann::json& j);
};

/// (1/W) sum w_i logloss_i + lambda (alpha ||beta||_1 + (1 - alpha)/2 ||beta||^2),
/// intercept unpenalized.
double logreg_objective(const encode::FeatureMatrix& x, std::span<const int> labels, std::span<const double> weights,
                        double intercept, std::span<const double> coef, double lambda, double alpha_mix);

/// Gradient of the objective: element 0 is the intercept, then one entry per
/// column. Uses sign(beta_j) for the l1 term and 0 at beta_j = 0.
std::vector<double> logreg_gradient(const encode::FeatureMatrix& x, std::span<const int> labels,
                                    std::span<const double> weights, double intercept, std::span<const double> coef,
                                    double lambda, double alpha_mix);

struct LogregModel {
  LogregParams params;
  double intercept = 0.0;
  std::vector<double> coef;
  bool converged = false;
  int iterations = 0;
  /// Objective after each accepted step, starting with the initial point.
  std::vector<double> objective_trace;

  double margin(const double* row) const;
  std::vector<double> predict_proba(const encode::FeatureMatrix& x) const;
  nlohmann::json to_json() const;
  static LogregModel from_json(const nlohmann::json& j);
};

/// Proximal Newton: each outer step minimizes the penalized quadratic model by
/// coordinate descent, then backtracks until the objective does not increase.
/// Stops when the largest coefficient change falls below tol, or at max_iter
/// with converged = false. Empty `weights` means balanced class weights (or
/// uniform when params.balanced is false).
LogregModel fit_logreg(const encode::FeatureMatrix& x, std::span<const int> labels, std::span<const double> weights,
                       const LogregParams& params);

}  // namespace ubsb::models
