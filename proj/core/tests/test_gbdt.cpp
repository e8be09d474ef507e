#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "ubsb/gbdt.hpp"
#include "ubsb/metrics.hpp"
#include "ubsb/random.hpp"

using namespace ubsb;
using namespace ubsb::models;

namespace {

encode::FeatureMatrix separable(std::size_t n, std::vector<int>& y) {
  auto rng = RandomStream::derive(5, StreamDomain::sampling, 1);
  std::vector<double> v;
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform(), b = rng.uniform();
    v.push_back(a);
    v.push_back(b);
    y.push_back(a + b > 1.0 ? 1 : 0);
  }
  return ubsb::testing::matrix(n, 2, v);
}

double weighted_logloss(double margin, int y, double w) {
  const double p = sigmoid(margin);
  return -w * (y ? std::log(p) : std::log(1 - p));
}

}  // namespace

TEST(ClassWeights, Balanced) {
  const std::vector<int> y{1, 0, 1, 0};
  const auto w = class_weights(y);
  EXPECT_DOUBLE_EQ(w.w_pos, 1.0);
  EXPECT_DOUBLE_EQ(w.w_neg, 1.0);
}

TEST(ClassWeights, TwentyOfHundred) {
  std::vector<int> y(100, 0);
  for (int i = 0; i < 20; ++i) y[static_cast<std::size_t>(i)] = 1;
  const auto w = class_weights(y);
  EXPECT_DOUBLE_EQ(w.w_pos, 2.5);
  EXPECT_DOUBLE_EQ(w.w_neg, 0.625);
  EXPECT_DOUBLE_EQ(20 * w.w_pos + 80 * w.w_neg, 100.0);
}

TEST(GradHess, Values) {
  const auto a = logistic_grad_hess(0.5, 1, 1.0);
  EXPECT_DOUBLE_EQ(a.g, -0.5);
  EXPECT_DOUBLE_EQ(a.h, 0.25);
  const auto b = logistic_grad_hess(0.9, 0, 2.0);
  EXPECT_NEAR(b.g, 1.8, 1e-15);
  EXPECT_NEAR(b.h, 0.18, 1e-15);
}

TEST(GradHess, MatchesFiniteDifferences) {
  for (double m : {-3.0, -0.4, 0.0, 1.1, 2.5}) {
    for (int y : {0, 1}) {
      const double w = 1.7, h = 1e-5;
      const auto gh = logistic_grad_hess(sigmoid(m), y, w);
      const double fd = (weighted_logloss(m + h, y, w) - weighted_logloss(m - h, y, w)) / (2 * h);
      const double fd2 =
          (weighted_logloss(m + h, y, w) - 2 * weighted_logloss(m, y, w) + weighted_logloss(m - h, y, w)) / (h * h);
      EXPECT_NEAR(gh.g, fd, 1e-6);
      EXPECT_NEAR(gh.h, fd2, 1e-4);
    }
  }
}

TEST(SplitGain, SymmetricIsZero) { EXPECT_DOUBLE_EQ(split_gain(1, 1, 1, 1, 0, 0, 0), 0.0); }

TEST(SplitGain, Formula) { EXPECT_DOUBLE_EQ(split_gain(-2, 1, 2, 1, 0, 1, 0), 2.0); }

TEST(SplitGain, GammaDominates) { EXPECT_LT(split_gain(0.01, 1, -0.01, 1, 0, 1, 10), 0.0); }

TEST(Gbdt, SeparableReachesTrainingAucOne) {
  std::vector<int> y;
  const auto x = separable(200, y);
  auto p = GbdtParams::for_preset(GbdtPreset::xgb_like);
  p.n_rounds_max = 50;
  p.learning_rate = 0.3;
  p.row_subsample = p.col_subsample = 1.0;
  p.seed = 1;
  const auto m = fit_gbdt(x, y, p);
  EXPECT_DOUBLE_EQ(metrics::roc_auc(m.predict_proba(x), y), 1.0);
}

TEST(Gbdt, ZeroLearningRateIsConstant) {
  std::vector<int> y;
  const auto x = separable(100, y);
  auto p = GbdtParams::for_preset(GbdtPreset::xgb_like);
  p.learning_rate = 0.0;
  p.n_rounds_max = 5;
  const auto m = fit_gbdt(x, y, p);
  double pos = 0;
  for (int v : y) pos += v;
  const double base = pos / static_cast<double>(y.size());
  for (double q : m.predict_proba(x)) EXPECT_NEAR(q, base, 1e-12);
}

TEST(Gbdt, TraceBoundedByStoppingContract) {
  std::vector<int> y, yv;
  const auto x = separable(300, y);
  auto xv = separable(100, yv);
  for (auto preset : {GbdtPreset::xgb_like, GbdtPreset::lgbm_like, GbdtPreset::cat_like}) {
    auto p = GbdtParams::for_preset(preset);
    p.n_rounds_max = 200;
    p.early_stopping_rounds = 10;
    const auto m = fit_gbdt(x, y, p, &xv, yv);
    EXPECT_LE(m.trace.size(), static_cast<std::size_t>(m.best_iteration + p.early_stopping_rounds));
    EXPECT_GE(m.best_iteration, 1);
  }
}

TEST(Gbdt, SerializationRoundTrip) {
  std::vector<int> y;
  const auto x = separable(150, y);
  auto p = GbdtParams::for_preset(GbdtPreset::lgbm_like);
  p.n_rounds_max = 10;
  const auto m = fit_gbdt(x, y, p);
  const auto back = GbdtModel::from_json(m.to_json());
  EXPECT_EQ(back.predict_proba(x), m.predict_proba(x));
}

TEST(Gbdt, ZeroTreesIsSigmoidOfBase) {
  std::vector<int> y;
  const auto x = separable(50, y);
  auto p = GbdtParams::for_preset(GbdtPreset::xgb_like);
  p.n_rounds_max = 3;
  const auto m = fit_gbdt(x, y, p);
  for (double q : m.predict_proba(x, 0)) EXPECT_DOUBLE_EQ(q, sigmoid(m.base_margin));
}
