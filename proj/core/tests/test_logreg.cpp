#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "ubsb/logreg.hpp"
#include "ubsb/random.hpp"

using namespace ubsb;
using namespace ubsb::models;

namespace {

encode::FeatureMatrix noisy_linear(std::size_t n, std::vector<int>& y) {
  auto rng = RandomStream::derive(9, StreamDomain::sampling, 3);
  std::vector<double> v;
  y.clear();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal(0, 1), b = rng.normal(0, 1), c = rng.normal(0, 1);
    v.insert(v.end(), {a, b, c});
    y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-(1.5 * a - b + 0.3)))) ? 1 : 0);
  }
  return ubsb::testing::matrix(n, 3, v);
}

}  // namespace

TEST(Logreg, HugePenaltyLeavesInterceptOnly) {
  std::vector<int> y;
  const auto x = noisy_linear(300, y);
  LogregParams p;
  p.lambda = 1e6;
  p.balanced = false;
  const auto m = fit_logreg(x, y, {}, p);
  for (double c : m.coef) EXPECT_EQ(c, 0.0);
  double pos = 0;
  for (int v : y) pos += v;
  const double rate = pos / static_cast<double>(y.size());
  EXPECT_NEAR(m.intercept, std::log(rate / (1 - rate)), 1e-4);
}

TEST(Logreg, SeparableWithoutPenaltyHitsIterationCap) {
  const auto x = ubsb::testing::matrix(6, 1, {-3, -2, -1, 1, 2, 3});
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  LogregParams p;
  p.lambda = 0;
  p.max_iter = 15;
  const auto m = fit_logreg(x, y, {}, p);
  EXPECT_FALSE(m.converged);
  EXPECT_GT(m.coef[0], 3.0);
}

TEST(Logreg, GradientMatchesFiniteDifferences) {
  std::vector<int> y;
  const auto x = noisy_linear(200, y);
  std::vector<double> w;
  for (std::size_t i = 0; i < y.size(); ++i) w.push_back(0.5 + static_cast<double>(i % 3));
  const double lambda = 0.1, alpha = 0.5, b0 = 0.2;
  const std::vector<double> beta{0.7, -0.4, 0.05};
  const auto grad = logreg_gradient(x, y, w, b0, beta, lambda, alpha);
  const double h = 1e-6;
  for (std::size_t j = 0; j <= beta.size(); ++j) {
    auto plus = beta, minus = beta;
    double bp = b0, bm = b0;
    if (j == 0) {
      bp += h;
      bm -= h;
    } else {
      plus[j - 1] += h;
      minus[j - 1] -= h;
    }
    const double fd =
        (logreg_objective(x, y, w, bp, plus, lambda, alpha) - logreg_objective(x, y, w, bm, minus, lambda, alpha)) /
        (2 * h);
    EXPECT_LE(std::abs(grad[j] - fd), 1e-5 * std::max(1.0, std::abs(fd))) << "coordinate " << j;
  }
}

TEST(Logreg, FittedPointIsStationary) {
  std::vector<int> y;
  const auto x = noisy_linear(400, y);
  LogregParams p;
  p.lambda = 0.01;
  p.alpha_mix = 0.5;
  p.tol = 1e-8;
  p.balanced = false;
  const auto m = fit_logreg(x, y, {}, p);
  ASSERT_TRUE(m.converged);
  const auto g = logreg_gradient(x, y, {}, m.intercept, m.coef, p.lambda, p.alpha_mix);
  EXPECT_NEAR(g[0], 0.0, 1e-5);
  for (std::size_t j = 0; j < m.coef.size(); ++j) {
    if (m.coef[j] != 0.0) {
      EXPECT_NEAR(g[j + 1], 0.0, 1e-5);
    } else {
      EXPECT_LE(std::abs(g[j + 1]), p.lambda * p.alpha_mix + 1e-5);
    }
  }
  for (std::size_t i = 1; i < m.objective_trace.size(); ++i) {
    EXPECT_LE(m.objective_trace[i], m.objective_trace[i - 1] + 1e-12);
  }
}
