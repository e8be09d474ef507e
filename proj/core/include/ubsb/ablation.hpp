#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ubsb/dataio.hpp"
#include "ubsb/date.hpp"
#include "ubsb/metrics.hpp"
#include "ubsb/models.hpp"
#include "ubsb/tune.hpp"

namespace ubsb::eval {

/// Paired out-of-fold scores for one family.
struct OofPredictions {
  models::Family family = models::Family::gbdt_xgb;
  std::vector<std::int64_t> ids;
  std::vector<int> labels;
  std::vector<int> folds;
  std::vector<double> demo_score;
  std::vector<double> full_score;

  std::size_t size() const { return ids.size(); }
  int n_folds() const;
  /// Throws DataError on ragged columns, missing folds or single-class data.
  void validate() const;
};

void write_oof_csv(std::span<const OofPredictions> oof, std::ostream& out);
void write_oof_csv(std::span<const OofPredictions> oof, const std::filesystem::path& path);
/// One entry per family, in order of first appearance.
std::vector<OofPredictions> read_oof_csv(std::istream& in, const std::string& source_name = "oof");
std::vector<OofPredictions> read_oof_csv(const std::filesystem::path& path);

struct Metrics {
  double auc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;

  nlohmann::json to_json() const;
};

struct FoldResult {
  int fold = 0;
  models::HyperParams hyperparams;
  int best_iteration = 0;
  double inner_auc = 0.0;
  double threshold = 0.5;
  Metrics metrics;
  tune::TuneResult tuning;

  nlohmann::json to_json(bool with_history) const;
};

struct VariantResult {
  std::string variant;
  std::vector<FoldResult> folds;
  /// Unweighted mean of per-fold metrics.
  Metrics fold_mean;
  /// Metrics on the pooled out-of-fold predictions with per-fold thresholds.
  Metrics pooled;

  nlohmann::json to_json(bool with_history) const;
};

struct FamilyResult {
  models::Family family = models::Family::gbdt_xgb;
  VariantResult demo;
  VariantResult full;
  /// a = Demo, b = Full on pooled out-of-fold scores.
  metrics::DeLongResult delong;
};

struct AblationSettings {
  std::vector<models::Family> families = models::all_families();
  int folds = 5;
  int n_trials = 50;
  double inner_fraction = 0.8;
  std::uint64_t seed = 0;
  /// Shuffle labels before anything else (null-signal control).
  bool permute_labels = false;
  /// Keep full trial histories in the report.
  bool keep_history = true;

  nlohmann::json to_json() const;
};

struct AblationReport {
  AblationSettings settings;
  Date reference_date{};
  dataio::FoldPlan plan;
  std::vector<FamilyResult> results;
  std::vector<OofPredictions> oof;

  nlohmann::json to_json() const;
  nlohmann::json delong_json() const;
  /// Model, Variant, AUC, F1, Precision, Recall; fold-mean values.
  std::string metrics_csv() const;
};

struct TunedFit {
  models::TrainedModel model;
  tune::NestedTuneResult tuned;
};

/// Tunes on an inner split of `rows`, sets the F1 threshold from the selected
/// trial's inner validation scores, then refits on all rows (boosted families
/// with n_rounds = best iteration).
TunedFit fit_tuned(std::span<const Record> rows, models::Family family, const dataio::FeatureSet& features,
                   const Date& reference_date, const tune::TuneSettings& settings);

using ProgressFn = std::function<void(const std::string&)>;

/// Demo vs Full under one stratified fold plan: per family, variant and outer
/// fold, tunes on the outer training rows only, refits on all of them, picks
/// the F1 threshold from the selected trial's inner validation scores, and
/// scores the held-out fold.
AblationReport run_ablation(std::span<const Record> rows, const Date& reference_date, const AblationSettings& settings,
                            const ProgressFn& progress = {});

inline constexpr std::size_t kSmokeRows = 10000;

/// Stratified sample of `n` rows in their original order; all rows when there
/// are at most `n`.
std::vector<Record> smoke_sample(std::span<const Record> rows, std::uint64_t seed, std::size_t n = kSmokeRows);

/// Labels shuffled with a seeded Fisher-Yates permutation.
std::vector<Record> permute_labels(std::span<const Record> rows, std::uint64_t seed);

Metrics evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold);

}  // namespace ubsb::eval
