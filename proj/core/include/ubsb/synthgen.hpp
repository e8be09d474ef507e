#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ubsb/config.hpp"
#include "ubsb/random.hpp"
#include "ubsb/schema.hpp"

namespace ubsb::synthgen {

/// A synthetic resident: the published record plus generation state that is
/// never written out.
struct Profile {
  Record record;
  int household_size = 1;  // 1..5
  int device_tier = 0;     // index into MarginalConfig::device_tiers
  int car_tier = 0;        // 0 = no car, else 1 + index into car_rules
  int risk_points = 0;
};

struct JobIncome {
  std::string job;
  EmploymentStatus employment_status = EmploymentStatus::Employed;
  double monthly_income = 0.0;
};

struct PhoneAssignment {
  std::string phone_model;
  Date phone_purchase_date{};
  int device_tier = 0;
};

struct CarAssignment {
  bool owns_car = false;
  std::string car_brand;
  std::optional<Date> car_purchase_date;
  int car_tier = 0;
};

struct DistrictAssignment {
  std::string home_district;
  bool owns_home = false;
  double monthly_rent = 0.0;
};

struct Behavior {
  double monthly_subscriptions = 0.0;
  int online_shopping_frequency = 0;
  bool social_media_active = false;
  bool owns_credit_card = false;
};

struct LabelOutcome {
  int delinquency_FL = 0;
  int risk_points = 0;
};

int sample_age(const MarginalConfig& config, RandomStream& rng);
JobIncome sample_job_income(const MarginalConfig& config, RandomStream& rng);
Education assign_education(std::string_view job, double monthly_income, const MarginalConfig& config,
                           RandomStream& rng);
PhoneAssignment assign_phone(double monthly_income, const MarginalConfig& config, RandomStream& rng);
CarAssignment assign_car(double monthly_income, const MarginalConfig& config, RandomStream& rng);
/// Requires household_size in 1..5.
DistrictAssignment assign_district_rent(double monthly_income, int household_size, const MarginalConfig& config,
                                        RandomStream& rng);
Behavior synth_behavior(const Profile& profile, const MarginalConfig& config, RandomStream& rng);

/// Config-derived constants the label rules need; compute once per config.
struct RuleContext {
  double median_income = 0.0;
  std::size_t flagship_index = 0;
  Date reference_date{};
  static RuleContext from(const MarginalConfig& config);
};

/// Sum of points of the satisfied rules for a fully populated profile.
int risk_points(const Profile& profile, const LabelRuleSet& rules, const RuleContext& context);
int risk_points(const Profile& profile, const MarginalConfig& config);

/// Labels with `rules.calibrated_threshold` and flips with noise_flip_prob.
LabelOutcome apply_label_rules(const Profile& profile, const LabelRuleSet& rules, const RuleContext& context,
                               RandomStream& rng);

/// Integer threshold whose noise-free prevalence P(points >= t) is closest to
/// `target_prevalence`; ties go to the higher threshold. Throws DataError on
/// empty input.
int calibrate_threshold(std::span<const int> risk_points, double target_prevalence);
int calibrate_threshold(std::span<const Profile> profiles, double target_prevalence);

enum class SanityViolation {
  none,
  luxury_car_on_low_income,
  new_flagship_on_low_income,
  rent_exceeds_income,
  subscriptions_exceed_income,
};
std::string_view to_string(SanityViolation v) noexcept;

SanityViolation first_sanity_violation(const Profile& profile, const MarginalConfig& config);
/// True when the profile passes every hard economic constraint.
bool sanity_filter(const Profile& profile, const MarginalConfig& config);

struct RowViolation {
  std::int64_t id = 0;
  /// 1-based data row (header excluded).
  std::size_t row = 0;
  std::string rule;
  std::string detail;
};

/// Consistency and sanity rules over published rows; at most one entry per
/// (row, rule).
std::vector<RowViolation> validate_rows(std::span<const Record> rows, const MarginalConfig& config);

/// Latent fields reconstructed from a published record (device tier from the
/// phone model, car tier from the brand). Used to audit published datasets.
Profile reconstruct_profile(const Record& record, const MarginalConfig& config);

/// Runs every stage except labeling for record `index`; retries with fresh
/// sub-streams until the sanity filter passes.
Profile generate_unlabeled(const MarginalConfig& config, std::uint64_t seed, std::size_t index);

/// Threshold used for labeling: config.label_rules.calibrated_threshold when
/// set, else calibrated on a seed-determined sample whose size does not depend
/// on n.
int resolve_threshold(const MarginalConfig& config, std::uint64_t seed);

/// Exactly n profiles with ids 1..n. Record i depends only on (config, seed, i).
std::vector<Profile> generate(const MarginalConfig& config, std::size_t n, std::uint64_t seed);

inline constexpr int kMaxRegenerationAttempts = 100;
inline constexpr const char* kGeneratorVersion = "ubsb-synthgen/1";

}  // namespace ubsb::synthgen
