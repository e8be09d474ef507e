#include <gtest/gtest.h>

#include <map>

#include "test_util.hpp"
#include "ubsb/date.hpp"
#include "ubsb/error.hpp"
#include "ubsb/synthgen.hpp"

using namespace ubsb;
using namespace ubsb::synthgen;
using ubsb::testing::default_config;

namespace {

constexpr int kDraws = 100000;

RandomStream rng_for(std::uint64_t i) { return RandomStream::derive(77, StreamDomain::generation, i); }

MarginalConfig single_occupation(double income) {
  auto c = default_config();
  OccupationSpec o;
  o.title = "Clerk";
  o.income = {income, income};
  o.status_weights = {1.0, 0.0, 0.0};
  c.occupations = {o};
  return c;
}

Profile hand_profile(const Record& r, int device_tier, int car_tier) {
  Profile p;
  p.record = r;
  p.device_tier = device_tier;
  p.car_tier = car_tier;
  return p;
}

std::size_t luxury_rule(const MarginalConfig& c) {
  for (std::size_t i = 0; i < c.car_rules.size(); ++i) {
    if (c.car_rules[i].luxury) return i;
  }
  return c.car_rules.size();
}

}  // namespace

TEST(Config, DefaultLoadsAndRoundTrips) {
  const auto& c = default_config();
  EXPECT_NO_THROW(c.validate());
  const auto again = parse_config(to_toml(c));
  EXPECT_EQ(to_toml(again), to_toml(c));
}

TEST(Config, MalformedTomlNamesSource) {
  try {
    parse_config("age_bands = [", "bad.toml");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.toml"), std::string::npos);
  }
}

TEST(JobIncome, DegenerateOccupation) {
  const auto c = single_occupation(20000);
  auto rng = rng_for(0);
  const auto j = sample_job_income(c, rng);
  EXPECT_EQ(j.job, "Clerk");
  EXPECT_EQ(j.employment_status, EmploymentStatus::Employed);
  EXPECT_EQ(j.monthly_income, 20000);
}

TEST(JobIncome, WeightsAreRespected) {
  auto c = single_occupation(30000);
  auto second = c.occupations[0];
  second.title = "Driver";
  c.occupations[0].weight = 3;
  second.weight = 1;
  c.occupations.push_back(second);
  auto rng = rng_for(1);
  int first = 0;
  for (int i = 0; i < kDraws; ++i) first += sample_job_income(c, rng).job == "Clerk";
  EXPECT_NEAR(first / double(kDraws), 0.75, 0.01);
}

TEST(JobIncome, IncomeInsideBand) {
  const auto& c = default_config();
  auto rng = rng_for(2);
  for (int i = 0; i < 5000; ++i) {
    const auto j = sample_job_income(c, rng);
    EXPECT_TRUE(c.occupations[c.occupation_index(j.job)].income.contains(j.monthly_income));
  }
}

TEST(Education, MinimumAndUpgrade) {
  auto c = single_occupation(30000);
  auto rng = rng_for(3);
  c.occupations[0].min_education = Education::PhD;
  EXPECT_EQ(assign_education("Clerk", 30000, c, rng), Education::PhD);
  c.occupations[0].min_education = Education::University;
  c.education_upgrade_prob = 0.0;
  for (int i = 0; i < 100; ++i) EXPECT_EQ(assign_education("Clerk", 30000, c, rng), Education::University);
  c.occupations[0].min_education = Education::HighSchool;
  c.education_upgrade_prob = 0.2;
  int up = 0;
  for (int i = 0; i < kDraws; ++i) up += assign_education("Clerk", 30000, c, rng) == Education::University;
  EXPECT_NEAR(up / double(kDraws), 0.2, 0.01);
}

TEST(Education, UnknownJobIsConfigError) {
  auto rng = rng_for(4);
  EXPECT_THROW(assign_education("Astronaut", 1, default_config(), rng), ConfigError);
}

TEST(Phone, LowIncomeGetsLowestTier) {
  const auto& c = default_config();
  auto rng = rng_for(5);
  const auto p = assign_phone(c.device_tiers[0].income.min, c, rng);
  EXPECT_EQ(p.device_tier, 0);
  const auto& pool = c.device_tiers[0].models;
  EXPECT_NE(std::find(pool.begin(), pool.end(), p.phone_model), pool.end());
}

TEST(Phone, DegenerateTier) {
  auto c = default_config();
  c.device_tiers.resize(1);
  c.device_tiers[0].models = {"Nokia 3310"};
  c.device_tiers[0].age_months = {12, 0};
  auto rng = rng_for(6);
  const auto p = assign_phone(40000, c, rng);
  EXPECT_EQ(p.phone_model, "Nokia 3310");
  EXPECT_EQ(p.phone_purchase_date, subtract_months(c.reference_date, 12));
}

TEST(Phone, TierMeanAges) {
  const auto& c = default_config();
  auto rng = rng_for(7);
  std::map<int, std::pair<double, int>> acc;
  for (int i = 0; i < kDraws; ++i) {
    const auto j = sample_job_income(c, rng);
    const auto p = assign_phone(j.monthly_income, c, rng);
    auto& a = acc[p.device_tier];
    a.first += months_between(p.phone_purchase_date, c.reference_date);
    ++a.second;
  }
  for (const auto& [tier, a] : acc) {
    if (a.second < 1000) continue;
    const double expected = c.device_tiers[static_cast<std::size_t>(tier)].age_months.mean;
    EXPECT_NEAR(a.first / a.second, expected, 0.05 * expected) << "tier " << tier;
  }
}

TEST(Car, ZeroProbabilityMeansNoCar) {
  auto c = default_config();
  c.car_rules[0].ownership_prob = 0.0;
  auto rng = rng_for(8);
  const auto a = assign_car(c.car_rules[0].income_threshold, c, rng);
  EXPECT_FALSE(a.owns_car);
  EXPECT_TRUE(a.car_brand.empty());
  EXPECT_FALSE(a.car_purchase_date.has_value());
}

TEST(Car, CertainOwnershipAtTop) {
  auto c = default_config();
  auto& top = c.car_rules.back();
  top.ownership_prob = 1.0;
  auto rng = rng_for(9);
  const auto a = assign_car(top.income_threshold * 2, c, rng);
  EXPECT_TRUE(a.owns_car);
  EXPECT_NE(std::find(top.brands.begin(), top.brands.end(), a.car_brand), top.brands.end());
  EXPECT_EQ(a.car_tier, static_cast<int>(c.car_rules.size()));
}

TEST(Car, OwnershipRatePerBand) {
  const auto& c = default_config();
  auto rng = rng_for(10);
  std::vector<std::pair<int, int>> acc(c.car_rules.size());
  for (int i = 0; i < kDraws; ++i) {
    const double income = sample_job_income(c, rng).monthly_income;
    std::size_t band = c.car_rules.size();
    for (std::size_t k = 0; k < c.car_rules.size(); ++k) {
      if (c.car_rules[k].income_threshold <= income) band = k;
    }
    if (band == c.car_rules.size()) continue;
    const auto a = assign_car(income, c, rng);
    acc[band].first += a.owns_car;
    ++acc[band].second;
  }
  for (std::size_t k = 0; k < acc.size(); ++k) {
    if (acc[k].second < 2000) continue;
    EXPECT_NEAR(acc[k].first / double(acc[k].second), c.car_rules[k].ownership_prob, 0.02) << "band " << k;
  }
}

TEST(District, HomeownerPaysNoRent) {
  auto c = default_config();
  c.home_ownership_prob_by_income.points = {{0.0, 1.0}};
  auto rng = rng_for(11);
  const auto d = assign_district_rent(50000, 3, c, rng);
  EXPECT_TRUE(d.owns_home);
  EXPECT_EQ(d.monthly_rent, 0.0);
}

TEST(District, RentFormula) {
  auto c = default_config();
  c.districts = {District{"Merkez", 100.0, 1}};
  c.rent_jitter = 0.0;
  c.home_ownership_prob_by_income.points = {{0.0, 0.0}};
  auto rng = rng_for(12);
  const auto d = assign_district_rent(50000, 2, c, rng);
  EXPECT_EQ(d.home_district, "Merkez");
  EXPECT_EQ(d.monthly_rent, 6000.0);
}

TEST(District, TopEarnersLiveInTopRanks) {
  const auto& c = default_config();
  const int n = static_cast<int>(c.districts.size());
  auto rng = rng_for(13);
  for (int i = 0; i < 200; ++i) {
    const auto d = assign_district_rent(1e9, 1, c, rng);
    int rank = 0;
    for (const auto& x : c.districts) {
      if (x.name == d.home_district) rank = x.income_rank;
    }
    EXPECT_GT(rank, n - 3);
  }
}

TEST(District, HouseholdSizeChecked) {
  auto rng = rng_for(14);
  EXPECT_THROW(assign_district_rent(1, 0, default_config(), rng), ConfigError);
  EXPECT_THROW(assign_district_rent(1, 6, default_config(), rng), ConfigError);
}

TEST(Behavior, DegenerateBands) {
  auto c = default_config();
  for (auto& b : c.behavior_bands) {
    b.subscriptions = {300, 0};
    b.shopping = {0, 0};
    b.social_media_prob = 0;
    b.credit_card_prob = 0;
  }
  auto rng = rng_for(15);
  Profile p;
  p.record.monthly_income = 40000;
  const auto b = synth_behavior(p, c, rng);
  EXPECT_EQ(b.monthly_subscriptions, 300);
  EXPECT_EQ(b.online_shopping_frequency, 0);
  EXPECT_FALSE(b.social_media_active);
  EXPECT_FALSE(b.owns_credit_card);
}

TEST(Behavior, BandMeans) {
  const auto& c = default_config();
  auto rng = rng_for(16);
  for (std::size_t k = 0; k < c.behavior_bands.size(); ++k) {
    const auto& band = c.behavior_bands[k];
    Profile p;
    p.record.monthly_income = k == 0 ? band.income_max : c.behavior_bands[k - 1].income_max + 1;
    double subs = 0, shop = 0;
    for (int i = 0; i < kDraws; ++i) {
      const auto b = synth_behavior(p, c, rng);
      subs += b.monthly_subscriptions;
      shop += b.online_shopping_frequency;
    }
    EXPECT_NEAR(subs / kDraws, band.subscriptions.mean, 0.05 * band.subscriptions.mean) << "band " << k;
    EXPECT_NEAR(shop / kDraws, band.shopping.mean, 0.05 * band.shopping.mean) << "band " << k;
  }
}

TEST(Labels, NoRuleFires) {
  const auto& c = default_config();
  auto r = ubsb::testing::sample_record();
  r.owns_home = true;
  r.monthly_rent = 0;
  auto rules = c.label_rules;
  rules.noise_flip_prob = 0;
  rules.calibrated_threshold = 1;
  auto rng = rng_for(17);
  const auto out = apply_label_rules(hand_profile(r, 1, 1), rules, RuleContext::from(c), rng);
  EXPECT_EQ(out.risk_points, 0);
  EXPECT_EQ(out.delinquency_FL, 0);
}

TEST(Labels, UnemployedWithSevereRentBurden) {
  const auto& c = default_config();
  auto r = ubsb::testing::sample_record();
  r.employment_status = EmploymentStatus::Unemployed;
  r.monthly_income = 20000;
  r.monthly_rent = 13000;
  EXPECT_EQ(risk_points(hand_profile(r, 1, 1), c), 6);
  auto rules = c.label_rules;
  rules.noise_flip_prob = 0;
  auto rng = rng_for(18);
  for (int t = 1; t <= 6; ++t) {
    rules.calibrated_threshold = t;
    EXPECT_EQ(apply_label_rules(hand_profile(r, 1, 1), rules, RuleContext::from(c), rng).delinquency_FL, 1);
  }
}

TEST(Labels, NoiseFlipRate) {
  const auto& c = default_config();
  auto rules = c.label_rules;
  rules.noise_flip_prob = 0.03;
  rules.calibrated_threshold = 1;
  const auto p = hand_profile(ubsb::testing::sample_record(), 1, 1);
  const auto ctx = RuleContext::from(c);
  auto rng = rng_for(19);
  int flips = 0;
  for (int i = 0; i < kDraws; ++i) flips += apply_label_rules(p, rules, ctx, rng).delinquency_FL;
  EXPECT_NEAR(flips / double(kDraws), 0.03, 0.003);
}

TEST(Calibration, Enumeration) {
  EXPECT_EQ(calibrate_threshold(std::vector<int>(50, 0), 0.2), 1);
  std::vector<int> uniform;
  for (int i = 0; i < 1000; ++i) uniform.push_back(i % 10);
  EXPECT_EQ(calibrate_threshold(uniform, 0.2), 8);
  EXPECT_EQ(calibrate_threshold(uniform, 0.5), 5);
  EXPECT_THROW(calibrate_threshold(std::vector<int>{}, 0.2), DataError);
}

TEST(Calibration, MatchesBruteForce) {
  auto rng = rng_for(20);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> pts;
    const int n = static_cast<int>(rng.uniform_int(1, 60));
    for (int i = 0; i < n; ++i) pts.push_back(static_cast<int>(rng.uniform_int(0, 8)));
    const double target = rng.uniform();
    int best = 1;
    double err = 1e9;
    for (int t = 1; t <= 10; ++t) {
      int hit = 0;
      for (int v : pts) hit += v >= t;
      const double e = std::abs(hit / double(n) - target);
      if (e <= err + 1e-12 && t <= *std::max_element(pts.begin(), pts.end()) + 1) {
        best = t;
        err = std::min(e, err);
      }
    }
    EXPECT_EQ(calibrate_threshold(pts, target), best);
  }
}

TEST(Sanity, Constraints) {
  const auto& c = default_config();
  const auto lux = luxury_rule(c);
  ASSERT_LT(lux, c.car_rules.size());
  auto r = ubsb::testing::sample_record();
  r.car_brand = c.car_rules[lux].brands.front();
  r.monthly_income = c.min_wage;
  r.monthly_rent = 0.3 * r.monthly_income;
  r.monthly_subscriptions = 0;
  const int tier = static_cast<int>(lux) + 1;
  EXPECT_FALSE(sanity_filter(hand_profile(r, 0, tier), c));
  EXPECT_EQ(first_sanity_violation(hand_profile(r, 0, tier), c), SanityViolation::luxury_car_on_low_income);
  r.monthly_income = 10 * c.min_wage;
  r.monthly_rent = 0.3 * r.monthly_income;
  EXPECT_TRUE(sanity_filter(hand_profile(r, 0, tier), c));
  r.monthly_rent = 0.95 * r.monthly_income;
  EXPECT_EQ(first_sanity_violation(hand_profile(r, 0, tier), c), SanityViolation::rent_exceeds_income);
}

TEST(Generate, SingleProfileIsDeterministic) {
  const auto a = generate(default_config(), 1, 5);
  const auto b = generate(default_config(), 1, 5);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].record, b[0].record);
  EXPECT_EQ(a[0].record.id, 1);
}

TEST(Generate, RecordDependsOnlyOnIndex) {
  const auto small = generate(default_config(), 20, 11);
  const auto large = generate(default_config(), 60, 11);
  for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i].record, large[i].record);
}

TEST(Generate, PrevalenceAndValidity) {
  const auto& c = default_config();
  const auto profiles = generate(c, 100000, 42);
  std::vector<Record> rows;
  double pos = 0;
  for (const auto& p : profiles) {
    rows.push_back(p.record);
    pos += p.record.delinquency_FL;
    ASSERT_TRUE(sanity_filter(p, c));
  }
  EXPECT_NEAR(pos / profiles.size(), c.target_prevalence, 0.02);
  EXPECT_TRUE(validate_rows(rows, c).empty());
}

TEST(Generate, UnsatisfiableConfigNamesRecord) {
  auto c = default_config();
  for (auto& b : c.behavior_bands) b.subscriptions = {1e9, 0};
  try {
    generate(c, 3, 1);
    FAIL() << "expected GenerationError";
  } catch (const GenerationError& e) {
    EXPECT_NE(std::string(e.what()).find("record"), std::string::npos);
  }
}

TEST(Validate, HomeownerWithRent) {
  auto r = ubsb::testing::sample_record();
  r.owns_home = true;
  r.monthly_rent = 500;
  const std::vector<Record> rows{r};
  const auto v = validate_rows(rows, default_config());
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].rule, "homeowner_pays_rent");
  EXPECT_EQ(v[0].row, 1u);
}

TEST(Validate, InconsistentCarFields) {
  auto r = ubsb::testing::sample_record();
  r.owns_car = false;
  const std::vector<Record> rows{r};
  const auto v = validate_rows(rows, default_config());
  ASSERT_FALSE(v.empty());
  EXPECT_EQ(v[0].rule, "car_fields_inconsistent");
}
