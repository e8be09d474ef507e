#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ubsb/date.hpp"
#include "ubsb/models.hpp"
#include "ubsb/schema.hpp"

namespace ubsb::explain {

/// Probability of the positive (default) class for each record.
using Scorer = std::function<std::vector<double>(std::span<const Record>)>;

Scorer model_scorer(const models::TrainedModel& model);

/// Value range and distance scale of one mutable feature, learned from
/// training rows. Date columns are handled as ages in months.
struct FeatureDomain {
  enum class Kind { numeric, categorical, boolean };

  Column column = Column::monthly_subscriptions;
  Kind kind = Kind::numeric;
  double lo = 0.0;
  double hi = 0.0;
  /// Median absolute deviation (never 0).
  double mad = 1.0;
  bool integral = true;
  /// 21 quantile points for numerics, all values otherwise.
  std::vector<double> grid;
  std::vector<std::string> values;
};

struct CfDomains {
  Date reference_date{};
  std::vector<FeatureDomain> features;

  const FeatureDomain* find(Column c) const;
  static CfDomains fit(std::span<const Record> train, const Date& reference_date, std::span<const Column> columns);
  nlohmann::json to_json() const;
  static CfDomains from_json(const nlohmann::json& j);
};

/// The ten alternative attributes.
std::vector<Column> default_mutable_columns();

struct CfConfig {
  int k = 4;
  std::vector<Column> mutable_columns = default_mutable_columns();
  double lambda_validity = 10.0;
  double lambda_proximity = 0.5;
  double lambda_diversity = 1.0;
  double lambda_sparsity = 0.1;
  int population = 50;
  int generations = 100;
  /// Target class of the thresholded prediction (0 = approve).
  int desired_class = 0;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument.
  void validate() const;
  nlohmann::json to_json() const;
};

struct Candidate {
  Record record;
  std::vector<std::string> changed;
  double probability = 0.0;
  bool valid = false;
  double proximity = 0.0;

  nlohmann::json to_json() const;
};

struct CounterfactualSet {
  Record original;
  double original_probability = 0.0;
  double threshold = 0.5;
  int desired_class = 0;
  std::vector<Candidate> candidates;
  /// The original already has the desired prediction.
  bool trivially_satisfied = false;
  /// Search budget ran out without a valid candidate.
  bool exhausted = false;

  nlohmann::json to_json() const;
  std::string render_text() const;
};

/// Value of a feature used in distances: numerics as is, dates as ages in
/// months (-1 without a car), booleans as 0/1.
double feature_number(const Record& r, Column c, const Date& reference_date);
std::string feature_label(const Record& r, Column c);

/// MAD-normalized L1 over numerics plus 0/1 mismatches over the rest.
double proximity(const Record& a, const Record& b, const CfDomains& domains);
/// Names of the mutable features whose values differ.
std::vector<std::string> changed_features(const Record& original, const Record& candidate, const CfDomains& domains);

/// Enforces car field consistency, homeowner rent of 0 and training ranges.
void repair(Record& r, const Record& original, const CfDomains& domains);

/// Genetic search for up to k valid, diverse counterfactuals.
CounterfactualSet generate_counterfactuals(const Scorer& scorer, double threshold, const Record& record,
                                           const CfDomains& domains, const CfConfig& config);
CounterfactualSet generate_counterfactuals(const models::TrainedModel& model, const Record& record,
                                           const CfDomains& domains, const CfConfig& config);

struct FlipCount {
  std::size_t count = 0;
  /// Share of valid candidates that edit the feature.
  double share = 0.0;
};

struct FlipProfile {
  std::size_t candidates = 0;
  std::map<std::string, FlipCount> features;

  nlohmann::json to_json() const;
};

/// Counts over valid candidates; every feature of `columns` gets an entry.
/// Throws DataError when no set has a valid candidate.
FlipProfile flip_frequency(std::span<const CounterfactualSet> sets, std::span<const Column> columns);

struct SingleEditResult {
  std::size_t eligible = 0;
  std::size_t flippable = 0;
  double rate = 0.0;
  /// Flippable records per feature.
  std::map<std::string, std::size_t> by_feature;

  nlohmann::json to_json() const;
};

/// Share of records not already at `desired_class` that an edit of exactly
/// one mutable feature (over its grid) can flip. Exhaustive.
SingleEditResult single_edit_flip_rate(const Scorer& scorer, double threshold, std::span<const Record> records,
                                       const CfDomains& domains, std::span<const Column> mutable_columns,
                                       int desired_class = 0);

}  // namespace ubsb::explain
