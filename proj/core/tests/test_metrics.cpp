#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ubsb/error.hpp"
#include "ubsb/metrics.hpp"
#include "ubsb/random.hpp"

using namespace ubsb;
using namespace ubsb::metrics;

namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      pairs += 1;
    }
  }
  return num / pairs;
}

// Structural components straight from the kernel definition, O(n^2).
double quadratic_delong_variance(const std::vector<double>& a, const std::vector<double>& b, const std::vector<int>& y) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
  auto psi = [](double x, double z) { return x > z ? 1.0 : x == z ? 0.5 : 0.0; };
  const double m = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());
  std::vector<double> v10a, v10b, v01a, v01b;
  for (auto i : pos) {
    double sa = 0, sb = 0;
    for (auto j : neg) {
      sa += psi(a[i], a[j]);
      sb += psi(b[i], b[j]);
    }
    v10a.push_back(sa / n);
    v10b.push_back(sb / n);
  }
  for (auto j : neg) {
    double sa = 0, sb = 0;
    for (auto i : pos) {
      sa += psi(a[i], a[j]);
      sb += psi(b[i], b[j]);
    }
    v01a.push_back(sa / m);
    v01b.push_back(sb / m);
  }
  auto cov = [](const std::vector<double>& u, const std::vector<double>& v) {
    const double k = static_cast<double>(u.size());
    const double mu = std::accumulate(u.begin(), u.end(), 0.0) / k;
    const double mv = std::accumulate(v.begin(), v.end(), 0.0) / k;
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - mu) * (v[i] - mv);
    return s / (k - 1);
  };
  const double s10 = cov(v10a, v10a) + cov(v10b, v10b) - 2 * cov(v10a, v10b);
  const double s01 = cov(v01a, v01a) + cov(v01b, v01b) - 2 * cov(v01a, v01b);
  return s10 / m + s01 / n;
}

struct Instance {
  std::vector<double> a, b;
  std::vector<int> y;
};

Instance random_instance(std::uint64_t seed, std::size_t max_n, bool coarse) {
  auto rng = RandomStream::derive(seed, StreamDomain::sampling, 7);
  const auto n = static_cast<std::size_t>(rng.uniform_int(4, static_cast<std::int64_t>(max_n)));
  Instance in;
  for (std::size_t i = 0; i < n; ++i) in.y.push_back(i < 4 ? static_cast<int>(i % 2) : rng.bernoulli(0.3));
  for (std::size_t i = 0; i < n; ++i) {
    const double shift = in.y[i] ? 0.7 : 0.0;
    double sa = rng.normal(shift, 1.0), sb = 0.6 * sa + rng.normal(shift, 0.8);
    if (coarse) {
      sa = std::round(sa * 2) / 2;
      sb = std::round(sb * 2) / 2;
    }
    in.a.push_back(sa);
    in.b.push_back(sb);
  }
  return in;
}

}  // namespace

TEST(RocAuc, PerfectSeparationIsOne) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.8, 0.9}, std::vector<int>{0, 0, 1, 1}), 1.0);
}

TEST(RocAuc, AllTiedIsHalf) {
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, std::vector<int>{0, 1, 0, 1}), 0.5);
}

TEST(RocAuc, HandWorkedTies) {
  // pos {0.1, 0.2}, neg {0.2, 0.3}: 0.5 pair credit for the tie.
  EXPECT_DOUBLE_EQ(roc_auc(std::vector<double>{0.1, 0.2, 0.2, 0.3}, std::vector<int>{1, 1, 0, 0}), 0.125);
}

TEST(RocAuc, SingleClassThrows) {
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), DataError);
}

TEST(RocAuc, MatchesPairwiseOracleOn500) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = random_instance(seed, 500, seed % 2 == 0);
    EXPECT_NEAR(roc_auc(in.a, in.y), pairwise_auc(in.a, in.y), 1e-12);
  }
}

TEST(PrecisionRecall, PredictionsEqualLabels) {
  const std::vector<int> y{1, 0, 1, 0, 1};
  const auto r = precision_recall_f1(y, y);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 1.0);
  EXPECT_DOUBLE_EQ(r.f1, 1.0);
}

TEST(PrecisionRecall, FromConfusionCounts) {
  std::vector<int> pred, y;
  for (int i = 0; i < 90; ++i) pred.push_back(1), y.push_back(1);
  for (int i = 0; i < 10; ++i) pred.push_back(1), y.push_back(0);
  for (int i = 0; i < 10; ++i) pred.push_back(0), y.push_back(1);
  for (int i = 0; i < 50; ++i) pred.push_back(0), y.push_back(0);
  const auto r = precision_recall_f1(pred, y);
  EXPECT_DOUBLE_EQ(r.precision, 0.9);
  EXPECT_DOUBLE_EQ(r.recall, 0.9);
  EXPECT_NEAR(r.f1, 0.9, 1e-15);
}

TEST(PrecisionRecall, NoPositivePredictions) {
  const auto r = precision_recall_f1(std::vector<int>{0, 0, 0}, std::vector<int>{1, 0, 1});
  EXPECT_TRUE(r.precision_undefined);
  EXPECT_DOUBLE_EQ(r.f1, 0.0);
}

TEST(Threshold, FiveCandidateCuts) {
  EXPECT_DOUBLE_EQ(select_threshold_max_f1(std::vector<double>{0.1, 0.4, 0.6, 0.9}, std::vector<int>{0, 0, 1, 1}), 0.5);
}

TEST(Threshold, AllPositiveGivesMinusInfinity) {
  const double t = select_threshold_max_f1(std::vector<double>{0.2, 0.5, 0.7}, std::vector<int>{1, 1, 1});
  EXPECT_EQ(t, -std::numeric_limits<double>::infinity());
}

TEST(Threshold, SeparableScoresReachF1One) {
  const std::vector<double> s{0.05, 0.2, 0.3, 0.71, 0.8, 0.95};
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const double t = select_threshold_max_f1(s, y);
  EXPECT_GT(t, 0.3);
  EXPECT_LT(t, 0.71);
  EXPECT_DOUBLE_EQ(precision_recall_f1(apply_threshold(s, t), y).f1, 1.0);
}

TEST(DeLong, IdenticalScoresGiveUnitP) {
  const auto in = random_instance(3, 100, false);
  const auto r = delong_paired(in.a, in.a, in.y);
  EXPECT_DOUBLE_EQ(r.delta, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(DeLong, VarianceMatchesQuadraticOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = random_instance(100 + seed, 200, seed % 3 == 0);
    const auto r = delong_paired(in.a, in.b, in.y);
    EXPECT_NEAR(r.variance, quadratic_delong_variance(in.a, in.b, in.y), 1e-10) << "seed " << seed;
  }
}

TEST(DeLong, SwapNegatesZ) {
  const auto in = random_instance(11, 150, false);
  const auto ab = delong_paired(in.a, in.b, in.y);
  const auto ba = delong_paired(in.b, in.a, in.y);
  EXPECT_NEAR(ab.z, -ba.z, 1e-12);
  EXPECT_NEAR(ab.p_value, ba.p_value, 1e-12);
}

TEST(Bootstrap, ConstantStatistic) {
  const std::vector<int> y{0, 1, 0, 1, 1, 0, 0};
  const auto r = bootstrap_ci(y, [](std::span<const std::size_t>) { return 3.25; }, 200, 5);
  EXPECT_DOUBLE_EQ(r.lo, 3.25);
  EXPECT_DOUBLE_EQ(r.hi, 3.25);
}

TEST(Bootstrap, StratifiedResamplesKeepPrevalence) {
  std::vector<int> y(301, 0);
  for (std::size_t i = 0; i < y.size(); i += 4) y[i] = 1;
  const double pooled = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  for (std::size_t b = 0; b < 50; ++b) {
    const auto idx = stratified_resample(y, 9, b);
    ASSERT_EQ(idx.size(), y.size());
    double pos = 0;
    for (auto i : idx) pos += y[i];
    EXPECT_LE(std::abs(pos / static_cast<double>(idx.size()) - pooled), 1.0 / static_cast<double>(y.size()));
  }
}

TEST(Percentile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4, 5}, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile({1, 2, 3, 4}, 0.5), 2.5);
}
