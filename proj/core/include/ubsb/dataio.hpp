#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ubsb/schema.hpp"

namespace ubsb::dataio {

struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string generator_version;
  bool operator==(const Provenance&) const = default;
};

struct Dataset {
  std::vector<Record> rows;
  Provenance provenance;
  bool operator==(const Dataset&) const = default;
};

/// Checks ids are unique and contiguous from 1. Throws DataError.
void check_ids(std::span<const Record> rows);

/// CSV: header row in published column order, dates YYYY-MM-DD, booleans
/// true/false, empty cells for absent car fields, money as whole numbers.
void write_csv(const Dataset& dataset, std::ostream& out);
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
/// Throws SchemaError on header mismatch (naming the missing or unexpected
/// column) and DataError on bad cells ("row R, column C: ...") or duplicate ids.
Dataset read_csv(std::istream& in, const std::string& source_name = "csv");
Dataset read_csv(const std::filesystem::path& path);

std::string format_record(const Record& r);

struct FoldPlan {
  int k = 0;
  /// Fold index per row position.
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  std::vector<std::size_t> test_indices(int fold) const;
  std::vector<std::size_t> train_indices(int fold) const;
  nlohmann::json to_json() const;
  static FoldPlan from_json(const nlohmann::json& j);
};

/// Stratified assignment: each class is shuffled with `seed` and dealt
/// round-robin across folds. Requires k >= 2, n >= k and both classes present.
FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);

/// Throws DataError unless each fold's positive rate is within 1/n_fold of
/// the overall rate.
void check_fold_prevalence(const FoldPlan& plan, std::span<const int> labels);

/// Stratified two-way split; the first part receives `fraction` of each class.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const int> labels,
                                                                               double fraction,
                                                                               std::uint64_t seed);

struct FeatureSet {
  std::string name;
  std::vector<Column> columns;

  static FeatureSet demo();
  static FeatureSet full();
  /// The ten attributes Full adds to Demo.
  static FeatureSet alternative();
  /// Throws DataError on unknown, duplicate, id/label or empty columns.
  static FeatureSet custom(std::string name, const std::vector<std::string>& column_names);
  static FeatureSet by_name(const std::string& name);

  bool contains(Column c) const;
  bool operator==(const FeatureSet&) const = default;
};

struct FeatureView {
  std::vector<Column> columns;
  std::vector<std::vector<FieldValue>> rows;
  std::vector<int> labels;
};

FeatureView feature_view(std::span<const Record> rows, const FeatureSet& feature_set);

std::vector<int> labels_of(std::span<const Record> rows);

}  // namespace ubsb::dataio
