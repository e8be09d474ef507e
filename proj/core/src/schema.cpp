#include "ubsb/schema.hpp"

#include "ubsb/error.hpp"

namespace ubsb {
namespace {

constexpr std::array<std::string_view, kColumnCount> kNames = {
    "id",
    "age",
    "education",
    "employment_status",
    "job",
    "monthly_income",
    "phone_model",
    "phone_purchase_date",
    "owns_car",
    "car_brand",
    "car_purchase_date",
    "home_district",
    "owns_home",
    "monthly_rent",
    "owns_credit_card",
    "monthly_subscriptions",
    "online_shopping_frequency",
    "social_media_active",
    "delinquency_FL",
};

constexpr std::array<ColumnKind, kColumnCount> kKinds = {
    ColumnKind::identifier, ColumnKind::numeric,     ColumnKind::ordinal,     ColumnKind::categorical,
    ColumnKind::categorical, ColumnKind::numeric,    ColumnKind::text,        ColumnKind::date,
    ColumnKind::boolean,    ColumnKind::categorical, ColumnKind::date,        ColumnKind::categorical,
    ColumnKind::boolean,    ColumnKind::numeric,     ColumnKind::boolean,     ColumnKind::numeric,
    ColumnKind::numeric,    ColumnKind::boolean,     ColumnKind::label,
};

constexpr std::array<std::string_view, kEducationLevels> kEducation = {"HighSchool", "University", "MSc",
                                                                         "PhD"};
constexpr std::array<std::string_view, kEmploymentStatuses> kStatus = {"Employed", "Unemployed",
                                                                         "Self-Employed"};

}  // namespace

std::string_view to_string(Education e) noexcept { return kEducation[static_cast<int>(e)]; }
std::string_view to_string(EmploymentStatus s) noexcept { return kStatus[static_cast<int>(s)]; }

Education parse_education(std::string_view text) {
  for (int i = 0; i < kEducationLevels; ++i) {
    if (kEducation[i] == text) return static_cast<Education>(i);
  }
  throw DataError("unknown education level '" + std::string(text) + "'");
}

EmploymentStatus parse_employment_status(std::string_view text) {
  for (int i = 0; i < kEmploymentStatuses; ++i) {
    if (kStatus[i] == text) return static_cast<EmploymentStatus>(i);
  }
  throw DataError("unknown employment status '" + std::string(text) + "'");
}

std::string_view column_name(Column c) noexcept { return kNames[static_cast<int>(c)]; }
ColumnKind column_kind(Column c) noexcept { return kKinds[static_cast<int>(c)]; }

std::optional<Column> column_from_name(std::string_view name) noexcept {
  for (int i = 0; i < kColumnCount; ++i) {
    if (kNames[i] == name) return static_cast<Column>(i);
  }
  return std::nullopt;
}

const std::array<Column, kColumnCount>& all_columns() noexcept {
  static const std::array<Column, kColumnCount> cols = [] {
    std::array<Column, kColumnCount> out{};
    for (int i = 0; i < kColumnCount; ++i) out[i] = static_cast<Column>(i);
    return out;
  }();
  return cols;
}

FieldValue field_value(const Record& r, Column c) {
  switch (c) {
    case Column::id: return static_cast<double>(r.id);
    case Column::age: return static_cast<double>(r.age);
    case Column::education: return std::string(to_string(r.education));
    case Column::employment_status: return std::string(to_string(r.employment_status));
    case Column::job: return r.job;
    case Column::monthly_income: return r.monthly_income;
    case Column::phone_model: return r.phone_model;
    case Column::phone_purchase_date: return std::optional<Date>(r.phone_purchase_date);
    case Column::owns_car: return r.owns_car;
    case Column::car_brand: return r.car_brand;
    case Column::car_purchase_date: return r.car_purchase_date;
    case Column::home_district: return r.home_district;
    case Column::owns_home: return r.owns_home;
    case Column::monthly_rent: return r.monthly_rent;
    case Column::owns_credit_card: return r.owns_credit_card;
    case Column::monthly_subscriptions: return r.monthly_subscriptions;
    case Column::online_shopping_frequency: return static_cast<double>(r.online_shopping_frequency);
    case Column::social_media_active: return r.social_media_active;
    case Column::delinquency_FL: return static_cast<double>(r.delinquency_FL);
  }
  return 0.0;
}

}  // namespace ubsb
