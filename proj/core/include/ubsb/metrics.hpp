#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

namespace ubsb::metrics {

/// Rank-sum AUC with midranks for ties. Throws DataError unless both classes
/// are present or when lengths differ.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// No positive predictions: precision is reported as 0.
  bool precision_undefined = false;
  Confusion counts;
};

Confusion confusion(std::span<const int> predictions, std::span<const int> labels);
PrecisionRecallF1 precision_recall_f1(std::span<const int> predictions, std::span<const int> labels);

/// Positive prediction iff score >= threshold.
std::vector<int> apply_threshold(std::span<const double> scores, double threshold);

/// Candidate cuts are -inf, midpoints between consecutive distinct scores and
/// +inf. Returns the cut with the highest F1; ties go to the lowest cut.
double select_threshold_max_f1(std::span<const double> scores, std::span<const int> labels);

struct DeLongResult {
  double auc_a = 0.5;
  double auc_b = 0.5;
  double delta = 0.0;
  double variance = 0.0;
  double z = 0.0;
  double p_value = 1.0;
  /// Zero variance with a nonzero delta.
  bool degenerate = false;

  nlohmann::json to_json() const;
};

/// Paired DeLong test of AUC(b) - AUC(a) via structural components.
DeLongResult delong_paired(std::span<const double> scores_a, std::span<const double> scores_b,
                           std::span<const int> labels);

/// Structural components: V10 per positive and V01 per negative, in input order.
struct StructuralComponents {
  std::vector<double> v10;
  std::vector<double> v01;
  double auc = 0.5;
};
StructuralComponents structural_components(std::span<const double> scores, std::span<const int> labels);

struct BootstrapResult {
  double estimate = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> replicates;
};

/// Statistic evaluated on a multiset of row indices.
using IndexStatistic = std::function<double(std::span<const std::size_t>)>;

/// Indices for one stratified resample: positives drawn with replacement from
/// positives and negatives from negatives, counts preserved.
std::vector<std::size_t> stratified_resample(std::span<const int> labels, std::uint64_t seed, std::size_t replicate);

/// Percentile bootstrap (2.5 / 97.5 by linear interpolation) over B stratified
/// resamples. `estimate` is the statistic on the original sample.
BootstrapResult bootstrap_ci(std::span<const int> labels, const IndexStatistic& statistic, int B, std::uint64_t seed);

/// Linear-interpolation percentile of a sample, q in [0, 1].
double percentile(std::vector<double> values, double q);

double log_loss(std::span<const double> probs, std::span<const int> labels, std::span<const double> weights = {});

}  // namespace ubsb::metrics
