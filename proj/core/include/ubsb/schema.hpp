#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "ubsb/date.hpp"

namespace ubsb {

enum class Education : int { HighSchool = 0, University = 1, MSc = 2, PhD = 3 };
inline constexpr int kEducationLevels = 4;

enum class EmploymentStatus : int { Employed = 0, Unemployed = 1, SelfEmployed = 2 };
inline constexpr int kEmploymentStatuses = 3;

std::string_view to_string(Education e) noexcept;
std::string_view to_string(EmploymentStatus s) noexcept;
/// Throws DataError on unknown text.
Education parse_education(std::string_view text);
EmploymentStatus parse_employment_status(std::string_view text);

/// Dataset columns in published order.
enum class Column : int {
  id,
  age,
  education,
  employment_status,
  job,
  monthly_income,
  phone_model,
  phone_purchase_date,
  owns_car,
  car_brand,
  car_purchase_date,
  home_district,
  owns_home,
  monthly_rent,
  owns_credit_card,
  monthly_subscriptions,
  online_shopping_frequency,
  social_media_active,
  delinquency_FL,
};
inline constexpr int kColumnCount = 19;

enum class ColumnKind { identifier, numeric, ordinal, categorical, text, boolean, date, label };

std::string_view column_name(Column c) noexcept;
ColumnKind column_kind(Column c) noexcept;
std::optional<Column> column_from_name(std::string_view name) noexcept;
const std::array<Column, kColumnCount>& all_columns() noexcept;

/// One published row. Money is whole TRY.
struct Record {
  std::int64_t id = 0;
  int age = 0;
  Education education = Education::HighSchool;
  EmploymentStatus employment_status = EmploymentStatus::Employed;
  std::string job;
  double monthly_income = 0.0;
  std::string phone_model;
  Date phone_purchase_date{};
  bool owns_car = false;
  std::string car_brand;
  std::optional<Date> car_purchase_date;
  std::string home_district;
  bool owns_home = false;
  double monthly_rent = 0.0;
  bool owns_credit_card = false;
  double monthly_subscriptions = 0.0;
  int online_shopping_frequency = 0;
  bool social_media_active = false;
  int delinquency_FL = 0;

  bool operator==(const Record&) const = default;
};

/// Typed view of a single cell. Categorical and text columns yield strings,
/// booleans yield bool, dates yield optional<Date>, everything else double.
using FieldValue = std::variant<double, std::string, bool, std::optional<Date>>;

FieldValue field_value(const Record& r, Column c);

}  // namespace ubsb
