#pragma once

#include <string>
#include <vector>

#include "ubsb/config.hpp"
#include "ubsb/encode.hpp"
#include "ubsb/schema.hpp"

namespace ubsb::testing {

inline encode::FeatureMatrix matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  encode::FeatureMatrix m;
  m.n_rows = rows;
  m.n_cols = cols;
  m.values = std::move(values);
  for (std::size_t c = 0; c < cols; ++c) m.names.push_back("x" + std::to_string(c));
  return m;
}

inline const synthgen::MarginalConfig& default_config() {
  static const auto cfg = synthgen::load_config(UBSB_DEFAULT_CONFIG);
  return cfg;
}

/// A plausible employed renter with a car and a mid-range phone.
inline Record sample_record() {
  Record r;
  r.id = 1;
  r.age = 40;
  r.education = Education::University;
  r.employment_status = EmploymentStatus::Employed;
  r.job = "Software Engineer";
  r.monthly_income = 60000;
  r.phone_model = "Samsung Galaxy A55";
  r.phone_purchase_date = parse_date("2023-03-15");
  r.owns_car = true;
  r.car_brand = "Toyota Corolla";
  r.car_purchase_date = parse_date("2020-06-01");
  r.home_district = "Kadıköy";
  r.owns_home = false;
  r.monthly_rent = 18000;
  r.owns_credit_card = true;
  r.monthly_subscriptions = 600;
  r.online_shopping_frequency = 4;
  r.social_media_active = true;
  r.delinquency_FL = 0;
  return r;
}

}  // namespace ubsb::testing
