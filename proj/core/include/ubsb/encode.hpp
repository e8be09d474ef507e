#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ubsb/dataio.hpp"
#include "ubsb/date.hpp"
#include "ubsb/schema.hpp"

namespace ubsb::encode {

enum class Mode { linear, tree };
enum class FeatureKind { numeric, categorical, boolean, date };

std::string_view to_string(Mode m) noexcept;
Mode parse_mode(std::string_view text);

/// How one source column maps onto emitted matrix columns.
struct ColumnEncoding {
  Column column = Column::age;
  FeatureKind kind = FeatureKind::numeric;
  /// Categorical levels in code order. Tree mode orders them by training
  /// frequency (descending, ties by name); linear mode orders them by name.
  /// Code levels.size() is the unseen bucket.
  std::vector<std::string> levels;
  /// Standardization (linear mode, numeric and date columns only).
  double mean = 0.0;
  double stddev = 1.0;
  std::size_t first = 0;
  std::size_t width = 1;

  int code_of(std::string_view level) const;
};

struct EncoderState {
  Mode mode = Mode::tree;
  std::string feature_set;
  Date reference_date{};
  std::vector<ColumnEncoding> columns;
  std::vector<std::string> feature_names;

  std::size_t n_cols() const noexcept { return feature_names.size(); }
  nlohmann::json to_json() const;
  static EncoderState from_json(const nlohmann::json& j);
  bool operator==(const EncoderState&) const;
};

/// Dense row-major design matrix.
struct FeatureMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<double> values;
  std::vector<std::string> names;
  /// Optional histogram cut points per column, filled by callers that need them.
  std::vector<std::vector<double>> bin_edges;
  std::string feature_set;

  double at(std::size_t row, std::size_t col) const { return values[row * n_cols + col]; }
  const double* row(std::size_t r) const { return values.data() + r * n_cols; }
  /// Rows picked by index, in the given order.
  FeatureMatrix subset(std::span<const std::size_t> rows) const;
};

struct DateFeatures {
  int phone_age_months = 0;
  int car_age_months = -1;
};

/// Whole-month ages relative to `reference_date`; no car gives -1.
/// Throws DataError for dates after the reference date.
DateFeatures derive_date_features(const Record& row, const Date& reference_date);

/// Learns category maps and standardization from `train_rows` only.
/// Throws DataError on empty input.
EncoderState fit_encoder(std::span<const Record> train_rows, const dataio::FeatureSet& feature_set, Mode mode,
                         const Date& reference_date);

FeatureMatrix transform(const EncoderState& encoder, std::span<const Record> rows);

/// Cut points per column: bin(v) = number of cuts <= v. Columns with at most
/// max_bins distinct values get exact bins (midpoints between neighbours);
/// others get quantile cuts. Throws std::invalid_argument when max_bins < 2.
std::vector<std::vector<double>> build_histogram_bins(const FeatureMatrix& matrix, int max_bins = 255);

/// Cut points for one column of values.
std::vector<double> quantile_cuts(std::vector<double> values, int max_bins);

inline int bin_of(std::span<const double> cuts, double v) {
  std::size_t lo = 0, hi = cuts.size();
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cuts[mid] <= v) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  return static_cast<int>(lo);
}

}  // namespace ubsb::encode
