#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"
#include "ubsb/dataio.hpp"
#include "ubsb/error.hpp"
#include "ubsb/explain.hpp"
#include "ubsb/synthgen.hpp"

using namespace ubsb;
using namespace ubsb::explain;

namespace {

const std::vector<Record>& training_rows() {
  static const auto rows = [] {
    std::vector<Record> out;
    for (const auto& p : synthgen::generate(ubsb::testing::default_config(), 400, 12)) out.push_back(p.record);
    return out;
  }();
  return rows;
}

const CfDomains& domains() {
  static const auto d = CfDomains::fit(training_rows(), ubsb::testing::default_config().reference_date,
                                       default_mutable_columns());
  return d;
}

// Rejects (p = 0.9) anyone shopping fewer than five times a month.
Scorer shopping_boundary() {
  return [](std::span<const Record> rows) {
    std::vector<double> p;
    for (const auto& r : rows) p.push_back(r.online_shopping_frequency < 5 ? 0.9 : 0.1);
    return p;
  };
}

// Smooth risk in several alternative attributes.
Scorer blended() {
  return [](std::span<const Record> rows) {
    std::vector<double> p;
    for (const auto& r : rows) {
      const double z = 2.0 - r.monthly_income / 30000.0 + r.monthly_subscriptions / 500.0 -
                       (r.owns_credit_card ? 0.8 : 0.0) + r.online_shopping_frequency / 10.0;
      p.push_back(1.0 / (1.0 + std::exp(-z)));
    }
    return p;
  };
}

Record rejected_shopper() {
  auto r = ubsb::testing::sample_record();
  r.online_shopping_frequency = 4;
  return r;
}

}  // namespace

TEST(Domains, FitAndSerialize) {
  const auto& d = domains();
  const auto* shop = d.find(Column::online_shopping_frequency);
  ASSERT_NE(shop, nullptr);
  EXPECT_GT(shop->mad, 0.0);
  EXPECT_LE(shop->grid.size(), 21u);
  EXPECT_TRUE(std::is_sorted(shop->grid.begin(), shop->grid.end()));
  EXPECT_EQ(CfDomains::from_json(d.to_json()).to_json(), d.to_json());
}

TEST(Repair, EnforcesConsistency) {
  const auto original = ubsb::testing::sample_record();
  auto r = original;
  r.owns_car = false;
  repair(r, original, domains());
  EXPECT_TRUE(r.car_brand.empty());
  EXPECT_FALSE(r.car_purchase_date.has_value());
  r.owns_home = true;
  r.monthly_rent = 9000;
  repair(r, original, domains());
  EXPECT_EQ(r.monthly_rent, 0.0);
  r.monthly_subscriptions = 1e12;
  repair(r, original, domains());
  EXPECT_EQ(r.monthly_subscriptions, domains().find(Column::monthly_subscriptions)->hi);
}

TEST(Proximity, ZeroForSelfAndSymmetric) {
  const auto a = ubsb::testing::sample_record();
  auto b = a;
  EXPECT_EQ(proximity(a, a, domains()), 0.0);
  b.owns_credit_card = false;
  b.online_shopping_frequency += 3;
  EXPECT_GT(proximity(a, b, domains()), 1.0);
  EXPECT_DOUBLE_EQ(proximity(a, b, domains()), proximity(b, a, domains()));
}

TEST(Counterfactuals, BoundaryModelNeedsOneEdit) {
  CfConfig cfg;
  cfg.k = 1;
  cfg.seed = 3;
  const auto set = generate_counterfactuals(shopping_boundary(), 0.5, rejected_shopper(), domains(), cfg);
  ASSERT_EQ(set.candidates.size(), 1u);
  const auto& c = set.candidates[0];
  EXPECT_TRUE(c.valid);
  EXPECT_EQ(c.changed, std::vector<std::string>{"online_shopping_frequency"});
  EXPECT_GE(c.record.online_shopping_frequency, 5);
}

TEST(Counterfactuals, TwoDistinctEdits) {
  CfConfig cfg;
  cfg.k = 2;
  cfg.seed = 4;
  cfg.mutable_columns = {Column::online_shopping_frequency};
  const auto set = generate_counterfactuals(shopping_boundary(), 0.5, rejected_shopper(), domains(), cfg);
  ASSERT_EQ(set.candidates.size(), 2u);
  EXPECT_NE(set.candidates[0].record.online_shopping_frequency, set.candidates[1].record.online_shopping_frequency);
  for (const auto& c : set.candidates) EXPECT_GE(c.record.online_shopping_frequency, 5);
}

TEST(Counterfactuals, TriviallySatisfied) {
  auto r = rejected_shopper();
  r.online_shopping_frequency = 9;
  const auto set = generate_counterfactuals(shopping_boundary(), 0.5, r, domains(), CfConfig{});
  EXPECT_TRUE(set.trivially_satisfied);
  EXPECT_TRUE(set.candidates.empty());
}

TEST(Counterfactuals, ValidImmutableAndDeterministic) {
  const auto scorer = blended();
  const auto demo = dataio::FeatureSet::demo().columns;
  int checked = 0;
  for (std::size_t i = 0; i < training_rows().size() && checked < 8; ++i) {
    const auto& rec = training_rows()[i];
    if (scorer(std::span<const Record>(&rec, 1))[0] < 0.5) continue;
    ++checked;
    CfConfig cfg;
    cfg.seed = 17;
    cfg.population = 30;
    cfg.generations = 40;
    const auto a = generate_counterfactuals(scorer, 0.5, rec, domains(), cfg);
    const auto b = generate_counterfactuals(scorer, 0.5, rec, domains(), cfg);
    EXPECT_EQ(a.to_json(), b.to_json());
    for (const auto& c : a.candidates) {
      EXPECT_LT(scorer(std::span<const Record>(&c.record, 1))[0], 0.5);
      for (Column col : demo) EXPECT_EQ(field_value(c.record, col), field_value(rec, col)) << column_name(col);
      if (c.record.owns_home) EXPECT_EQ(c.record.monthly_rent, 0.0);
      EXPECT_EQ(c.record.owns_car, !c.record.car_brand.empty());
      EXPECT_EQ(c.record.owns_car, c.record.car_purchase_date.has_value());
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(FlipFrequency, HandTally) {
  CounterfactualSet s1, s2;
  Candidate a, b, c, invalid;
  a.valid = b.valid = c.valid = true;
  a.changed = {"monthly_subscriptions"};
  b.changed = {"monthly_subscriptions", "owns_credit_card"};
  c.changed = {"owns_credit_card"};
  invalid.changed = {"owns_car"};
  s1.candidates = {a, b};
  s2.candidates = {c, invalid};
  const std::vector<CounterfactualSet> sets{s1, s2};
  const auto cols = default_mutable_columns();
  const auto p = flip_frequency(sets, cols);
  EXPECT_EQ(p.candidates, 3u);
  EXPECT_EQ(p.features.at("monthly_subscriptions").count, 2u);
  EXPECT_EQ(p.features.at("owns_credit_card").count, 2u);
  EXPECT_EQ(p.features.at("owns_car").count, 0u);
  EXPECT_DOUBLE_EQ(p.features.at("owns_credit_card").share, 2.0 / 3.0);
}

TEST(FlipFrequency, SingleFeatureShareOne) {
  CounterfactualSet s;
  Candidate a;
  a.valid = true;
  a.changed = {"monthly_subscriptions"};
  s.candidates = {a, a};
  const std::vector<CounterfactualSet> sets{s};
  const auto p = flip_frequency(sets, default_mutable_columns());
  for (const auto& [name, fc] : p.features) EXPECT_EQ(fc.share, name == "monthly_subscriptions" ? 1.0 : 0.0);
}

TEST(FlipFrequency, NoValidCandidatesIsError) {
  const std::vector<CounterfactualSet> sets{CounterfactualSet{}};
  EXPECT_THROW(flip_frequency(sets, default_mutable_columns()), DataError);
}

TEST(SingleEdit, ConstantModelNeverFlips) {
  const Scorer constant = [](std::span<const Record> rows) { return std::vector<double>(rows.size(), 0.9); };
  const std::span<const Record> recs(training_rows().data(), 30);
  const auto r = single_edit_flip_rate(constant, 0.5, recs, domains(), default_mutable_columns());
  EXPECT_EQ(r.eligible, 30u);
  EXPECT_EQ(r.rate, 0.0);
}

TEST(SingleEdit, BoundaryModelAlwaysFlips) {
  std::vector<Record> recs;
  for (const auto& r : training_rows()) {
    if (r.online_shopping_frequency < 5) recs.push_back(r);
  }
  ASSERT_FALSE(recs.empty());
  const auto r = single_edit_flip_rate(shopping_boundary(), 0.5, recs, domains(), default_mutable_columns());
  EXPECT_EQ(r.eligible, recs.size());
  EXPECT_EQ(r.rate, 1.0);
  EXPECT_EQ(r.by_feature.at("online_shopping_frequency"), recs.size());
}
