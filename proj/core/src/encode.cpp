#include "ubsb/encode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "ubsb/error.hpp"
#include "ubsb/parallel.hpp"

namespace ubsb::encode {
namespace {

FeatureKind kind_for(Column c) {
  switch (column_kind(c)) {
    case ColumnKind::numeric:
    case ColumnKind::ordinal:
      return FeatureKind::numeric;
    case ColumnKind::categorical:
    case ColumnKind::text:
      return FeatureKind::categorical;
    case ColumnKind::boolean:
      return FeatureKind::boolean;
    case ColumnKind::date:
      return FeatureKind::date;
    default:
      throw DataError("column '" + std::string(column_name(c)) + "' cannot be encoded as a feature");
  }
}

double numeric_value(const Record& r, Column c) {
  switch (c) {
    case Column::age:
      return r.age;
    case Column::education:
      return static_cast<double>(r.education);
    case Column::monthly_income:
      return r.monthly_income;
    case Column::monthly_rent:
      return r.monthly_rent;
    case Column::monthly_subscriptions:
      return r.monthly_subscriptions;
    case Column::online_shopping_frequency:
      return r.online_shopping_frequency;
    default:
      throw DataError("column '" + std::string(column_name(c)) + "' is not numeric");
  }
}

bool bool_value(const Record& r, Column c) {
  switch (c) {
    case Column::owns_car:
      return r.owns_car;
    case Column::owns_home:
      return r.owns_home;
    case Column::owns_credit_card:
      return r.owns_credit_card;
    case Column::social_media_active:
      return r.social_media_active;
    default:
      throw DataError("column '" + std::string(column_name(c)) + "' is not boolean");
  }
}

std::string_view category_value(const Record& r, Column c) {
  switch (c) {
    case Column::employment_status:
      return to_string(r.employment_status);
    case Column::job:
      return r.job;
    case Column::phone_model:
      return r.phone_model;
    case Column::car_brand:
      return r.car_brand;
    case Column::home_district:
      return r.home_district;
    default:
      throw DataError("column '" + std::string(column_name(c)) + "' is not categorical");
  }
}

double date_value(const Record& r, Column c, const Date& ref) {
  const DateFeatures f = derive_date_features(r, ref);
  return c == Column::phone_purchase_date ? f.phone_age_months : f.car_age_months;
}

double raw_scalar(const Record& r, const ColumnEncoding& e, const Date& ref) {
  switch (e.kind) {
    case FeatureKind::numeric:
      return numeric_value(r, e.column);
    case FeatureKind::boolean:
      return bool_value(r, e.column) ? 1.0 : 0.0;
    case FeatureKind::date:
      return date_value(r, e.column, ref);
    case FeatureKind::categorical:
      break;
  }
  return 0.0;
}

std::string_view kind_name(FeatureKind k) {
  switch (k) {
    case FeatureKind::numeric:
      return "numeric";
    case FeatureKind::categorical:
      return "categorical";
    case FeatureKind::boolean:
      return "boolean";
    case FeatureKind::date:
      return "date";
  }
  return "numeric";
}

FeatureKind parse_kind(std::string_view s) {
  if (s == "numeric") return FeatureKind::numeric;
  if (s == "categorical") return FeatureKind::categorical;
  if (s == "boolean") return FeatureKind::boolean;
  if (s == "date") return FeatureKind::date;
  throw DataError("unknown feature kind '" + std::string(s) + "'");
}

std::string emitted_name(const ColumnEncoding& e) {
  std::string base(column_name(e.column));
  if (e.kind == FeatureKind::date) {
    return e.column == Column::phone_purchase_date ? "phone_age_months" : "car_age_months";
  }
  return base;
}

}  // namespace

std::string_view to_string(Mode m) noexcept { return m == Mode::linear ? "linear" : "tree"; }

Mode parse_mode(std::string_view text) {
  if (text == "linear") return Mode::linear;
  if (text == "tree") return Mode::tree;
  throw DataError("unknown encoder mode '" + std::string(text) + "'");
}

int ColumnEncoding::code_of(std::string_view level) const {
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (levels[i] == level) return static_cast<int>(i);
  }
  return static_cast<int>(levels.size());
}

DateFeatures derive_date_features(const Record& row, const Date& reference_date) {
  DateFeatures f;
  if (row.phone_purchase_date > reference_date) {
    throw DataError("phone_purchase_date " + format_date(row.phone_purchase_date) + " is after the reference date");
  }
  f.phone_age_months = months_between(row.phone_purchase_date, reference_date);
  if (row.car_purchase_date) {
    if (*row.car_purchase_date > reference_date) {
      throw DataError("car_purchase_date " + format_date(*row.car_purchase_date) + " is after the reference date");
    }
    f.car_age_months = months_between(*row.car_purchase_date, reference_date);
  }
  return f;
}

EncoderState fit_encoder(std::span<const Record> rows, const dataio::FeatureSet& feature_set, Mode mode,
                         const Date& reference_date) {
  if (rows.empty()) throw DataError("fit_encoder: no training rows");
  if (feature_set.columns.empty()) throw DataError("fit_encoder: empty feature set");
  EncoderState st;
  st.mode = mode;
  st.feature_set = feature_set.name;
  st.reference_date = reference_date;
  std::size_t next = 0;
  for (Column c : feature_set.columns) {
    ColumnEncoding e;
    e.column = c;
    e.kind = kind_for(c);
    if (e.kind == FeatureKind::categorical) {
      std::map<std::string, std::size_t> counts;
      for (const auto& r : rows) ++counts[std::string(category_value(r, c))];
      std::vector<std::pair<std::string, std::size_t>> levels(counts.begin(), counts.end());
      if (mode == Mode::tree) {
        std::stable_sort(levels.begin(), levels.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
      }
      for (auto& [name, n] : levels) e.levels.push_back(name);
      e.width = mode == Mode::linear ? e.levels.size() + 1 : 1;
    } else {
      e.width = 1;
      if (mode == Mode::linear && e.kind != FeatureKind::boolean) {
        double sum = 0.0;
        for (const auto& r : rows) sum += raw_scalar(r, e, reference_date);
        const double n = static_cast<double>(rows.size());
        e.mean = sum / n;
        double ss = 0.0;
        for (const auto& r : rows) {
          const double d = raw_scalar(r, e, reference_date) - e.mean;
          ss += d * d;
        }
        e.stddev = std::sqrt(ss / n);
        if (!(e.stddev > 0.0)) e.stddev = 1.0;
      }
    }
    e.first = next;
    next += e.width;
    if (e.kind == FeatureKind::categorical && mode == Mode::linear) {
      for (const auto& l : e.levels) st.feature_names.push_back(std::string(column_name(c)) + "=" + l);
      st.feature_names.push_back(std::string(column_name(c)) + "=<unseen>");
    } else {
      st.feature_names.push_back(emitted_name(e));
    }
    st.columns.push_back(std::move(e));
  }
  return st;
}

FeatureMatrix transform(const EncoderState& enc, std::span<const Record> rows) {
  FeatureMatrix m;
  m.n_rows = rows.size();
  m.n_cols = enc.n_cols();
  m.names = enc.feature_names;
  m.feature_set = enc.feature_set;
  m.values.assign(m.n_rows * m.n_cols, 0.0);
  parallel_for(m.n_rows, [&](std::size_t i) {
    double* out = m.values.data() + i * m.n_cols;
    const Record& r = rows[i];
    for (const auto& e : enc.columns) {
      if (e.kind == FeatureKind::categorical) {
        const int code = e.code_of(category_value(r, e.column));
        if (enc.mode == Mode::linear) {
          out[e.first + static_cast<std::size_t>(code)] = 1.0;
        } else {
          out[e.first] = code;
        }
      } else {
        double v = raw_scalar(r, e, enc.reference_date);
        if (enc.mode == Mode::linear && e.kind != FeatureKind::boolean) v = (v - e.mean) / e.stddev;
        out[e.first] = v;
      }
    }
  });
  return m;
}

FeatureMatrix FeatureMatrix::subset(std::span<const std::size_t> rows) const {
  FeatureMatrix m;
  m.n_rows = rows.size();
  m.n_cols = n_cols;
  m.names = names;
  m.bin_edges = bin_edges;
  m.feature_set = feature_set;
  m.values.resize(m.n_rows * n_cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(row(rows[i]), n_cols, m.values.data() + i * n_cols);
  }
  return m;
}

std::vector<double> quantile_cuts(std::vector<double> values, int max_bins) {
  if (max_bins < 2) throw std::invalid_argument("max_bins must be >= 2");
  std::vector<double> cuts;
  if (values.empty()) return cuts;
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 1; i < distinct.size(); ++i) cuts.push_back(0.5 * (distinct[i - 1] + distinct[i]));
    return cuts;
  }
  const std::size_t n = values.size();
  for (int k = 1; k < max_bins; ++k) {
    const std::size_t idx = static_cast<std::size_t>(k) * n / static_cast<std::size_t>(max_bins);
    if (idx == 0) continue;
    const double v = values[idx - 1];
    auto up = std::upper_bound(distinct.begin(), distinct.end(), v);
    if (up == distinct.end()) break;
    const double cut = 0.5 * (v + *up);
    if (cuts.empty() || cut > cuts.back()) cuts.push_back(cut);
  }
  return cuts;
}

std::vector<std::vector<double>> build_histogram_bins(const FeatureMatrix& matrix, int max_bins) {
  if (max_bins < 2) throw std::invalid_argument("max_bins must be >= 2");
  std::vector<std::vector<double>> out(matrix.n_cols);
  parallel_for(matrix.n_cols, [&](std::size_t j) {
    std::vector<double> col(matrix.n_rows);
    for (std::size_t i = 0; i < matrix.n_rows; ++i) col[i] = matrix.at(i, j);
    out[j] = quantile_cuts(std::move(col), max_bins);
  });
  return out;
}

nlohmann::json EncoderState::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& e : columns) {
    cols.push_back({{"column", column_name(e.column)},
                    {"kind", kind_name(e.kind)},
                    {"levels", e.levels},
                    {"mean", e.mean},
                    {"stddev", e.stddev},
                    {"first", e.first},
                    {"width", e.width}});
  }
  return {{"mode", to_string(mode)},
          {"feature_set", feature_set},
          {"reference_date", format_date(reference_date)},
          {"columns", cols},
          {"feature_names", feature_names}};
}

EncoderState EncoderState::from_json(const nlohmann::json& j) {
  EncoderState st;
  st.mode = parse_mode(j.at("mode").get<std::string>());
  st.feature_set = j.at("feature_set").get<std::string>();
  st.reference_date = parse_date(j.at("reference_date").get<std::string>());
  for (const auto& c : j.at("columns")) {
    ColumnEncoding e;
    const auto name = c.at("column").get<std::string>();
    const auto col = column_from_name(name);
    if (!col) throw DataError("encoder: unknown column '" + name + "'");
    e.column = *col;
    e.kind = parse_kind(c.at("kind").get<std::string>());
    e.levels = c.at("levels").get<std::vector<std::string>>();
    e.mean = c.at("mean").get<double>();
    e.stddev = c.at("stddev").get<double>();
    e.first = c.at("first").get<std::size_t>();
    e.width = c.at("width").get<std::size_t>();
    st.columns.push_back(std::move(e));
  }
  st.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  return st;
}

bool EncoderState::operator==(const EncoderState& o) const { return to_json() == o.to_json(); }

}  // namespace ubsb::encode
