#include "ubsb/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ubsb/error.hpp"
#include "ubsb/parallel.hpp"

namespace ubsb::synthgen {
namespace {

double round_money(double v) { return std::max(0.0, std::round(v)); }

int draw_months(const MeanCv& d, RandomStream& rng) {
  return static_cast<int>(std::lround(rng.gamma_mean_cv(d.mean, d.cv)));
}

const BehaviorBand& behavior_band(double income, const MarginalConfig& config) {
  for (const auto& b : config.behavior_bands) {
    if (income <= b.income_max) return b;
  }
  return config.behavior_bands.back();
}

double income_ratio(double amount, double income) {
  if (income <= 0.0) return std::numeric_limits<double>::infinity();
  return amount / income;
}

}  // namespace

int sample_age(const MarginalConfig& config, RandomStream& rng) {
  std::vector<double> w;
  w.reserve(config.age_bands.size());
  for (const auto& b : config.age_bands) w.push_back(b.weight);
  const auto& band = config.age_bands[rng.weighted_index(w)];
  return static_cast<int>(rng.uniform_int(band.min_age, band.max_age));
}

JobIncome sample_job_income(const MarginalConfig& config, RandomStream& rng) {
  std::vector<double> w;
  w.reserve(config.occupations.size());
  for (const auto& o : config.occupations) w.push_back(o.weight);
  const auto& occ = config.occupations[rng.weighted_index(w)];
  JobIncome out;
  out.job = occ.title;
  const double raw = rng.uniform(occ.income.min, occ.income.max);
  out.monthly_income = std::clamp(std::round(raw), occ.income.min, occ.income.max);
  out.employment_status = static_cast<EmploymentStatus>(rng.weighted_index(occ.status_weights));
  return out;
}

Education assign_education(std::string_view job, double /*monthly_income*/, const MarginalConfig& config,
                           RandomStream& rng) {
  const auto& occ = config.occupations[config.occupation_index(job)];
  int level = static_cast<int>(occ.min_education);
  if (rng.bernoulli(config.education_upgrade_prob)) level = std::min(level + 1, kEducationLevels - 1);
  return static_cast<Education>(level);
}

PhoneAssignment assign_phone(double monthly_income, const MarginalConfig& config, RandomStream& rng) {
  std::vector<std::size_t> candidates;
  const std::size_t last = config.device_tiers.size() - 1;
  for (std::size_t i = 0; i < config.device_tiers.size(); ++i) {
    const auto& band = config.device_tiers[i].income;
    if (monthly_income >= band.min && (i == last || monthly_income <= band.max)) candidates.push_back(i);
  }
  if (candidates.empty()) candidates.push_back(monthly_income <= 0.0 ? 0 : last);
  const std::size_t tier = candidates[static_cast<std::size_t>(rng.uniform_int(0, candidates.size() - 1))];
  const auto& t = config.device_tiers[tier];
  PhoneAssignment out;
  out.device_tier = static_cast<int>(tier);
  out.phone_model = t.models[static_cast<std::size_t>(rng.uniform_int(0, t.models.size() - 1))];
  out.phone_purchase_date = subtract_months(config.reference_date, draw_months(t.age_months, rng));
  return out;
}

CarAssignment assign_car(double monthly_income, const MarginalConfig& config, RandomStream& rng) {
  CarAssignment out;
  const CarRule* rule = nullptr;
  std::size_t rule_index = 0;
  for (std::size_t i = 0; i < config.car_rules.size(); ++i) {
    if (config.car_rules[i].income_threshold <= monthly_income) {
      rule = &config.car_rules[i];
      rule_index = i;
    }
  }
  if (rule == nullptr || !rng.bernoulli(rule->ownership_prob)) return out;
  out.owns_car = true;
  out.car_tier = static_cast<int>(rule_index) + 1;
  out.car_brand = rule->brands[static_cast<std::size_t>(rng.uniform_int(0, rule->brands.size() - 1))];
  out.car_purchase_date = subtract_months(config.reference_date, draw_months(rule->age_months, rng));
  return out;
}

DistrictAssignment assign_district_rent(double monthly_income, int household_size, const MarginalConfig& config,
                                        RandomStream& rng) {
  if (household_size < 1 || household_size > 5) throw ConfigError("household_size must lie in 1..5");
  const int d = static_cast<int>(config.districts.size());
  const double pct = config.income_percentile(monthly_income);
  int rank = std::clamp(static_cast<int>(std::ceil(pct * d)), 1, d);
  rank = std::clamp(rank + static_cast<int>(rng.uniform_int(-config.district_rank_jitter, config.district_rank_jitter)),
                    1, d);
  const District* district = &config.districts.front();
  for (const auto& cand : config.districts) {
    if (cand.income_rank == rank) district = &cand;
  }
  DistrictAssignment out;
  out.home_district = district->name;
  out.owns_home = rng.bernoulli(config.home_ownership_prob_by_income.at(monthly_income));
  const double jitter = rng.uniform(1.0 - config.rent_jitter, 1.0 + config.rent_jitter);
  if (!out.owns_home) {
    out.monthly_rent =
        round_money(district->rent_per_m2 * config.dwelling_area_m2[static_cast<std::size_t>(household_size - 1)] * jitter);
  }
  return out;
}

Behavior synth_behavior(const Profile& profile, const MarginalConfig& config, RandomStream& rng) {
  const auto& band = behavior_band(profile.record.monthly_income, config);
  Behavior out;
  out.monthly_subscriptions = round_money(rng.gamma_mean_cv(band.subscriptions.mean, band.subscriptions.cv));
  const double intensity = rng.gamma_mean_cv(band.shopping.mean, band.shopping.cv);
  out.online_shopping_frequency = static_cast<int>(rng.poisson(intensity));
  out.social_media_active = rng.bernoulli(band.social_media_prob);
  out.owns_credit_card = rng.bernoulli(band.credit_card_prob);
  return out;
}

RuleContext RuleContext::from(const MarginalConfig& config) {
  return {config.median_income(), config.flagship_index(), config.reference_date};
}

int risk_points(const Profile& p, const LabelRuleSet& rules, const RuleContext& ctx) {
  const auto& r = p.record;
  int points = 0;

  if (r.employment_status == EmploymentStatus::Unemployed) points += rules.employment.unemployed_points;
  if (r.employment_status == EmploymentStatus::SelfEmployed) points += rules.employment.self_employed_points;

  const int phone_age = months_between(r.phone_purchase_date, ctx.reference_date);
  if (phone_age < rules.device_churn.max_phone_age_months &&
      static_cast<std::size_t>(p.device_tier) >= ctx.flagship_index && r.monthly_income < ctx.median_income) {
    points += rules.device_churn.points;
  }

  const double rent_ratio = income_ratio(r.monthly_rent, r.monthly_income);
  if (rent_ratio > rules.rent_burden.ratio) points += rules.rent_burden.points;
  if (rent_ratio > rules.rent_burden.severe_ratio) points += rules.rent_burden.severe_points;

  if (r.online_shopping_frequency > rules.shopping_volatility.frequency_threshold &&
      r.monthly_income < ctx.median_income) {
    points += rules.shopping_volatility.points;
  }

  if (income_ratio(r.monthly_subscriptions, r.monthly_income) > rules.subscription_burden.ratio) {
    points += rules.subscription_burden.points;
  }

  if (!r.owns_credit_card && !r.owns_car && !r.owns_home) points += rules.thin_assets.points;

  if (r.age < rules.young_self_employed.max_age && r.employment_status == EmploymentStatus::SelfEmployed) {
    points += rules.young_self_employed.points;
  }
  return points;
}

int risk_points(const Profile& profile, const MarginalConfig& config) {
  return risk_points(profile, config.label_rules, RuleContext::from(config));
}

LabelOutcome apply_label_rules(const Profile& profile, const LabelRuleSet& rules, const RuleContext& context,
                               RandomStream& rng) {
  if (rules.calibrated_threshold < 1) throw ConfigError("label threshold is not calibrated", "label_rules");
  LabelOutcome out;
  out.risk_points = risk_points(profile, rules, context);
  out.delinquency_FL = out.risk_points >= rules.calibrated_threshold ? 1 : 0;
  if (rng.bernoulli(rules.noise_flip_prob)) out.delinquency_FL = 1 - out.delinquency_FL;
  return out;
}

int calibrate_threshold(std::span<const int> points, double target_prevalence) {
  if (points.empty()) throw DataError("calibrate_threshold: empty input");
  const int max_points = *std::max_element(points.begin(), points.end());
  std::vector<std::size_t> at_least(static_cast<std::size_t>(std::max(max_points, 0)) + 2, 0);
  for (int p : points) ++at_least[static_cast<std::size_t>(std::max(p, 0))];
  // Suffix sums: at_least[t] = #{points >= t}.
  for (std::size_t t = at_least.size() - 1; t-- > 0;) at_least[t] += at_least[t + 1];
  const double n = static_cast<double>(points.size());
  int best = 1;
  double best_err = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= max_points + 1; ++t) {
    const double prevalence = static_cast<double>(at_least[static_cast<std::size_t>(t)]) / n;
    const double err = std::abs(prevalence - target_prevalence);
    if (err <= best_err + 1e-12) {
      best = t;
      best_err = std::min(err, best_err);
    }
  }
  return best;
}

int calibrate_threshold(std::span<const Profile> profiles, double target_prevalence) {
  std::vector<int> points;
  points.reserve(profiles.size());
  for (const auto& p : profiles) points.push_back(p.risk_points);
  return calibrate_threshold(points, target_prevalence);
}

std::string_view to_string(SanityViolation v) noexcept {
  switch (v) {
    case SanityViolation::none: return "none";
    case SanityViolation::luxury_car_on_low_income: return "luxury_car_on_low_income";
    case SanityViolation::new_flagship_on_low_income: return "new_flagship_on_low_income";
    case SanityViolation::rent_exceeds_income: return "rent_exceeds_income";
    case SanityViolation::subscriptions_exceed_income: return "subscriptions_exceed_income";
  }
  return "unknown";
}

SanityViolation first_sanity_violation(const Profile& p, const MarginalConfig& config) {
  const auto& r = p.record;
  const bool low_income = r.monthly_income <= 1.2 * config.min_wage;
  if (low_income && p.car_tier > 0 && config.car_rules[static_cast<std::size_t>(p.car_tier - 1)].luxury) {
    return SanityViolation::luxury_car_on_low_income;
  }
  if (low_income && static_cast<std::size_t>(p.device_tier) >= config.flagship_index() &&
      months_between(r.phone_purchase_date, config.reference_date) < 12) {
    return SanityViolation::new_flagship_on_low_income;
  }
  if (r.monthly_rent > 0.9 * r.monthly_income) return SanityViolation::rent_exceeds_income;
  if (r.monthly_subscriptions > 0.3 * r.monthly_income) return SanityViolation::subscriptions_exceed_income;
  return SanityViolation::none;
}

bool sanity_filter(const Profile& profile, const MarginalConfig& config) {
  return first_sanity_violation(profile, config) == SanityViolation::none;
}

Profile reconstruct_profile(const Record& record, const MarginalConfig& config) {
  Profile p;
  p.record = record;
  p.household_size = 0;
  p.device_tier = 0;
  for (std::size_t i = 0; i < config.device_tiers.size(); ++i) {
    const auto& models = config.device_tiers[i].models;
    if (std::find(models.begin(), models.end(), record.phone_model) != models.end()) {
      p.device_tier = static_cast<int>(i);
      break;
    }
  }
  p.car_tier = 0;
  if (record.owns_car) {
    int applicable = 0;
    for (std::size_t i = 0; i < config.car_rules.size(); ++i) {
      if (config.car_rules[i].income_threshold <= record.monthly_income) applicable = static_cast<int>(i) + 1;
    }
    auto pool_has = [&](int tier) {
      const auto& brands = config.car_rules[static_cast<std::size_t>(tier - 1)].brands;
      return std::find(brands.begin(), brands.end(), record.car_brand) != brands.end();
    };
    if (applicable > 0 && pool_has(applicable)) {
      p.car_tier = applicable;
    } else {
      for (int t = 1; t <= static_cast<int>(config.car_rules.size()); ++t) {
        if (pool_has(t)) {
          p.car_tier = t;
          break;
        }
      }
    }
  }
  p.risk_points = risk_points(p, config);
  return p;
}

std::vector<RowViolation> validate_rows(std::span<const Record> rows, const MarginalConfig& config) {
  int min_age = 200, max_age = 0;
  for (const auto& b : config.age_bands) {
    min_age = std::min(min_age, b.min_age);
    max_age = std::max(max_age, b.max_age);
  }
  const Date ref = config.reference_date;
  std::vector<RowViolation> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Record& r = rows[i];
    auto flag = [&](std::string rule, std::string detail) {
      out.push_back({r.id, i + 1, std::move(rule), std::move(detail)});
    };
    if (r.age < min_age || r.age > max_age) flag("age_out_of_range", "age " + std::to_string(r.age));
    if (!(r.monthly_income > 0)) flag("income_not_positive", "monthly_income must be > 0");
    if (ref < r.phone_purchase_date) flag("phone_date_after_reference", format_date(r.phone_purchase_date));
    if (r.owns_car != !r.car_brand.empty() || r.owns_car != r.car_purchase_date.has_value()) {
      flag("car_fields_inconsistent", "owns_car, car_brand and car_purchase_date disagree");
    } else if (r.car_purchase_date && ref < *r.car_purchase_date) {
      flag("car_date_after_reference", format_date(*r.car_purchase_date));
    }
    if (r.owns_home && r.monthly_rent != 0) {
      flag("homeowner_pays_rent", "owns_home with monthly_rent " + std::to_string(static_cast<long long>(r.monthly_rent)));
    }
    if (!r.owns_home && !(r.monthly_rent > 0)) flag("renter_without_rent", "monthly_rent must be > 0");
    if (r.monthly_subscriptions < 0) flag("negative_subscriptions", "monthly_subscriptions < 0");
    if (r.online_shopping_frequency < 0) flag("negative_shopping_frequency", "online_shopping_frequency < 0");
    if (r.delinquency_FL != 0 && r.delinquency_FL != 1) flag("label_not_binary", "delinquency_FL not in {0, 1}");
    if (const auto v = first_sanity_violation(reconstruct_profile(r, config), config); v != SanityViolation::none) {
      flag(std::string(to_string(v)), "economic sanity constraint");
    }
  }
  return out;
}

Profile generate_unlabeled(const MarginalConfig& config, std::uint64_t seed, std::size_t index) {
  for (int attempt = 0; attempt < kMaxRegenerationAttempts; ++attempt) {
    RandomStream rng = RandomStream::derive(seed, StreamDomain::generation, index, static_cast<std::uint64_t>(attempt));
    Profile p;
    Record& r = p.record;
    r.age = sample_age(config, rng);
    JobIncome ji = sample_job_income(config, rng);
    r.job = std::move(ji.job);
    r.employment_status = ji.employment_status;
    r.monthly_income = ji.monthly_income;
    r.education = assign_education(r.job, r.monthly_income, config, rng);

    PhoneAssignment phone = assign_phone(r.monthly_income, config, rng);
    r.phone_model = std::move(phone.phone_model);
    r.phone_purchase_date = phone.phone_purchase_date;
    p.device_tier = phone.device_tier;

    CarAssignment car = assign_car(r.monthly_income, config, rng);
    r.owns_car = car.owns_car;
    r.car_brand = std::move(car.car_brand);
    r.car_purchase_date = car.car_purchase_date;
    p.car_tier = car.car_tier;

    p.household_size = static_cast<int>(rng.uniform_int(1, 5));
    DistrictAssignment home = assign_district_rent(r.monthly_income, p.household_size, config, rng);
    r.home_district = std::move(home.home_district);
    r.owns_home = home.owns_home;
    r.monthly_rent = home.monthly_rent;

    Behavior b = synth_behavior(p, config, rng);
    r.monthly_subscriptions = b.monthly_subscriptions;
    r.online_shopping_frequency = b.online_shopping_frequency;
    r.social_media_active = b.social_media_active;
    r.owns_credit_card = b.owns_credit_card;

    if (sanity_filter(p, config)) return p;
  }
  throw GenerationError("record " + std::to_string(index) + " violates sanity constraints after " +
                            std::to_string(kMaxRegenerationAttempts) + " regeneration attempts",
                        index);
}

int resolve_threshold(const MarginalConfig& config, std::uint64_t seed) {
  if (config.label_rules.calibrated_threshold > 0) return config.label_rules.calibrated_threshold;
  const RuleContext ctx = RuleContext::from(config);
  const std::uint64_t calibration_seed = mix_seed({seed, static_cast<std::uint64_t>(StreamDomain::calibration)});
  const auto m = static_cast<std::size_t>(config.calibration_sample);
  std::vector<int> points(m);
  parallel_for(m, [&](std::size_t i) {
    points[i] = risk_points(generate_unlabeled(config, calibration_seed, i), config.label_rules, ctx);
  });
  // Symmetric label noise moves prevalence p to p(1 - 2f) + f; aim the
  // noise-free prevalence so the emitted prevalence lands on target.
  const double f = config.label_rules.noise_flip_prob;
  const double clean_target = std::clamp((config.target_prevalence - f) / (1.0 - 2.0 * f), 1e-6, 1.0);
  return calibrate_threshold(points, clean_target);
}

std::vector<Profile> generate(const MarginalConfig& config, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("generate: n must be >= 1");
  LabelRuleSet rules = config.label_rules;
  rules.calibrated_threshold = resolve_threshold(config, seed);
  const RuleContext ctx = RuleContext::from(config);
  std::vector<Profile> out(n);
  parallel_for(n, [&](std::size_t i) {
    Profile p = generate_unlabeled(config, seed, i);
    RandomStream rng = RandomStream::derive(seed, StreamDomain::labels, i);
    const LabelOutcome label = apply_label_rules(p, rules, ctx, rng);
    p.record.id = static_cast<std::int64_t>(i) + 1;
    p.record.delinquency_FL = label.delinquency_FL;
    p.risk_points = label.risk_points;
    out[i] = std::move(p);
  });
  return out;
}

}  // namespace ubsb::synthgen
