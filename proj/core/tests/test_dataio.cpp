#include <gtest/gtest.h>

#include <sstream>

#include "test_util.hpp"
#include "ubsb/dataio.hpp"
#include "ubsb/error.hpp"
#include "ubsb/random.hpp"
#include "ubsb/synthgen.hpp"

using namespace ubsb;
using namespace ubsb::dataio;

namespace {

std::string to_csv(const Dataset& d) {
  std::ostringstream out;
  write_csv(d, out);
  return out.str();
}

std::vector<int> random_labels(std::uint64_t seed, std::size_t n) {
  auto rng = RandomStream::derive(seed, StreamDomain::sampling, 7);
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) y.push_back(rng.bernoulli(0.3) ? 1 : 0);
  y[0] = 1;
  y[1] = 0;
  return y;
}

}  // namespace

TEST(Csv, SingleRowRoundTrip) {
  Dataset d;
  d.rows.push_back(ubsb::testing::sample_record());
  std::istringstream in(to_csv(d));
  EXPECT_EQ(read_csv(in).rows, d.rows);
}

TEST(Csv, CarlessRowRoundTrip) {
  Dataset d;
  auto r = ubsb::testing::sample_record();
  r.owns_car = false;
  r.car_brand.clear();
  r.car_purchase_date.reset();
  d.rows.push_back(r);
  std::istringstream in(to_csv(d));
  EXPECT_EQ(read_csv(in).rows, d.rows);
}

TEST(Csv, MissingColumnIsNamed) {
  Dataset d;
  d.rows.push_back(ubsb::testing::sample_record());
  auto text = to_csv(d);
  const auto pos = text.find(",monthly_rent");
  ASSERT_NE(pos, std::string::npos);
  text.erase(pos, std::string(",monthly_rent").size());
  std::istringstream in(text);
  try {
    read_csv(in);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("monthly_rent"), std::string::npos);
  }
}

TEST(Csv, BadCellNamesRowAndColumn) {
  Dataset d;
  d.rows.push_back(ubsb::testing::sample_record());
  auto text = to_csv(d);
  const auto pos = text.find("60000");
  text.replace(pos, 5, "lots!");
  std::istringstream in(text);
  try {
    read_csv(in);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("monthly_income"), std::string::npos);
  }
}

TEST(Csv, DuplicateIdsRejected) {
  Dataset d;
  d.rows = {ubsb::testing::sample_record(), ubsb::testing::sample_record()};
  std::istringstream in(to_csv(d));
  EXPECT_THROW(read_csv(in), DataError);
}

TEST(Csv, GeneratedCorpusRoundTrip) {
  Dataset d;
  for (const auto& p : synthgen::generate(ubsb::testing::default_config(), 100000, 42)) d.rows.push_back(p.record);
  const auto text = to_csv(d);
  std::istringstream in(text);
  const auto back = read_csv(in);
  EXPECT_EQ(back.rows, d.rows);
  EXPECT_EQ(to_csv(back), text);
}

TEST(Folds, PerfectDivisibility) {
  const std::vector<int> y{1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const auto plan = stratified_kfold(y, 5, 3);
  for (int f = 0; f < 5; ++f) {
    int pos = 0;
    for (auto i : plan.test_indices(f)) pos += y[i];
    EXPECT_EQ(pos, 1);
  }
}

TEST(Folds, SevenPositivesOfThirtyFive) {
  std::vector<int> y(35, 0);
  for (int i = 0; i < 7; ++i) y[static_cast<std::size_t>(i * 5)] = 1;
  const auto plan = stratified_kfold(y, 5, 1);
  for (int f = 0; f < 5; ++f) {
    int pos = 0;
    for (auto i : plan.test_indices(f)) pos += y[i];
    EXPECT_GE(pos, 1);
    EXPECT_LE(pos, 2);
  }
  EXPECT_NO_THROW(check_fold_prevalence(plan, y));
}

TEST(Folds, DeterministicAndSerializable) {
  const auto y = random_labels(2, 300);
  const auto a = stratified_kfold(y, 5, 9);
  EXPECT_EQ(a.assignments, stratified_kfold(y, 5, 9).assignments);
  EXPECT_NE(a.assignments, stratified_kfold(y, 5, 10).assignments);
  EXPECT_EQ(FoldPlan::from_json(a.to_json()).assignments, a.assignments);
}

TEST(Folds, PartitionProperty) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    auto rng = RandomStream::derive(s, StreamDomain::sampling, 8);
    const auto n = static_cast<std::size_t>(rng.uniform_int(20, 400));
    const int k = static_cast<int>(rng.uniform_int(2, 10));
    const auto y = random_labels(s, n);
    const auto plan = stratified_kfold(y, k, s);
    std::vector<int> seen(n, 0);
    for (int f = 0; f < k; ++f) {
      const auto test = plan.test_indices(f);
      const auto train = plan.train_indices(f);
      EXPECT_EQ(test.size() + train.size(), n);
      for (auto i : test) ++seen[i];
    }
    for (int c : seen) EXPECT_EQ(c, 1);
    EXPECT_NO_THROW(check_fold_prevalence(plan, y));
  }
}

TEST(Folds, RejectsDegenerateInput) {
  EXPECT_ANY_THROW(stratified_kfold(std::vector<int>{1, 0, 1}, 1, 0));
  EXPECT_ANY_THROW(stratified_kfold(std::vector<int>{0, 0, 0, 0}, 2, 0));
}

TEST(Split, FractionPerClass) {
  const auto y = random_labels(4, 1000);
  const auto [a, b] = stratified_split(y, 0.8, 5);
  EXPECT_EQ(a.size() + b.size(), y.size());
  double pa = 0, pall = 0;
  for (auto i : a) pa += y[i];
  for (int v : y) pall += v;
  EXPECT_NEAR(pa / a.size(), pall / y.size(), 2.0 / a.size());
}

TEST(FeatureSets, Shapes) {
  const std::vector<Record> rows{ubsb::testing::sample_record()};
  EXPECT_EQ(feature_view(rows, FeatureSet::demo()).columns.size(), 7u);
  EXPECT_EQ(feature_view(rows, FeatureSet::full()).columns.size(), 17u);
  EXPECT_EQ(FeatureSet::alternative().columns.size(), 10u);
  for (auto c : FeatureSet::alternative().columns) EXPECT_FALSE(FeatureSet::demo().contains(c));
  EXPECT_THROW(FeatureSet::custom("empty", {}), DataError);
  EXPECT_THROW(FeatureSet::custom("bad", {"shoe_size"}), DataError);
  EXPECT_THROW(FeatureSet::custom("label", {"delinquency_FL"}), DataError);
}
