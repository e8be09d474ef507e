#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ubsb/date.hpp"
#include "ubsb/schema.hpp"

namespace ubsb::synthgen {

struct IncomeBand {
  double min = 0.0;
  double max = 0.0;
  bool contains(double income) const noexcept { return income >= min && income <= max; }
};

/// Non-negative quantity with a given mean and coefficient of variation.
/// Draws are gamma distributed; cv == 0 is the point mass at `mean`.
struct MeanCv {
  double mean = 0.0;
  double cv = 0.0;
};

struct AgeBand {
  int min_age = 18;
  int max_age = 75;
  double weight = 1.0;
};

struct OccupationSpec {
  std::string title;
  double weight = 1.0;
  IncomeBand income;
  Education min_education = Education::HighSchool;
  /// Indexed by EmploymentStatus.
  std::array<double, kEmploymentStatuses> status_weights{1.0, 0.0, 0.0};
};

/// Income bands may overlap; a resident is assigned uniformly among the tiers
/// whose band contains their income. The last tier's upper bound is ignored.
struct DeviceTier {
  std::string name;
  IncomeBand income;
  std::vector<std::string> models;
  MeanCv age_months;
};

/// The rule with the highest `income_threshold` not above the resident's
/// income applies. Thresholds are strictly increasing.
struct CarRule {
  double income_threshold = 0.0;
  double ownership_prob = 0.0;
  std::string tier;
  bool luxury = false;
  std::vector<std::string> brands;
  MeanCv age_months;
};

struct District {
  std::string name;
  double rent_per_m2 = 0.0;
  /// 1 = lowest-income district, D = highest.
  int income_rank = 1;
};

/// Piecewise-linear map clamped at both ends.
struct ProbabilityCurve {
  std::vector<std::pair<double, double>> points;
  double at(double x) const noexcept;
};

/// Behavior template for residents whose income is at most `income_max`
/// (the last band is open-ended).
struct BehaviorBand {
  double income_max = 0.0;
  MeanCv subscriptions;
  /// Mean of the Poisson-gamma monthly purchase count; cv is the gamma mixing cv.
  MeanCv shopping;
  double social_media_prob = 0.0;
  double credit_card_prob = 0.0;
};

struct EmploymentRule {
  int unemployed_points = 3;
  int self_employed_points = 1;
};
struct DeviceChurnRule {
  int max_phone_age_months = 10;  // exclusive
  int points = 2;
};
struct RentBurdenRule {
  double ratio = 0.4;
  int points = 2;
  double severe_ratio = 0.6;
  int severe_points = 1;
};
struct ShoppingVolatilityRule {
  int frequency_threshold = 14;  // exclusive: frequency > threshold fires
  int points = 2;
};
struct SubscriptionBurdenRule {
  double ratio = 0.05;
  int points = 1;
};
struct ThinAssetRule {
  int points = 1;
};
struct YoungSelfEmployedRule {
  int max_age = 25;  // exclusive
  int points = 1;
};

/// The seven delinquency rules. Income-relative predicates use the
/// population median income implied by the occupation mixture.
struct LabelRuleSet {
  EmploymentRule employment;
  DeviceChurnRule device_churn;
  RentBurdenRule rent_burden;
  ShoppingVolatilityRule shopping_volatility;
  SubscriptionBurdenRule subscription_burden;
  ThinAssetRule thin_assets;
  YoungSelfEmployedRule young_self_employed;
  double noise_flip_prob = 0.03;
  /// 0 means "calibrate during generation".
  int calibrated_threshold = 0;
};

struct MarginalConfig {
  std::vector<AgeBand> age_bands;
  std::vector<OccupationSpec> occupations;
  double education_upgrade_prob = 0.1;
  std::vector<DeviceTier> device_tiers;
  std::string flagship_tier = "flagship";
  std::vector<CarRule> car_rules;
  std::vector<District> districts;
  int district_rank_jitter = 2;
  std::array<double, 5> dwelling_area_m2{40, 60, 75, 90, 110};
  double rent_jitter = 0.1;
  ProbabilityCurve home_ownership_prob_by_income;
  std::vector<BehaviorBand> behavior_bands;
  LabelRuleSet label_rules;
  double target_prevalence = 0.2;
  Date reference_date{std::chrono::year{2025}, std::chrono::month{3}, std::chrono::day{31}};
  double min_wage = 22104.0;
  int calibration_sample = 20000;

  /// Throws ConfigError naming the first violated invariant.
  void validate() const;

  std::size_t flagship_index() const;
  std::size_t occupation_index(std::string_view title) const;
  /// CDF of the occupation-weighted income mixture.
  double income_percentile(double income) const;
  double median_income() const;
};

/// Parses TOML text. Errors carry "<source>:<line>: " prefixes.
MarginalConfig parse_config(std::string_view toml_text, std::string_view source_name = "config");
MarginalConfig load_config(const std::filesystem::path& path);

/// Canonical TOML rendering; parse_config(to_toml(c)) reproduces c.
std::string to_toml(const MarginalConfig& config);

}  // namespace ubsb::synthgen
