#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ubsb/dataio.hpp"
#include "ubsb/date.hpp"
#include "ubsb/encode.hpp"
#include "ubsb/models.hpp"
#include "ubsb/random.hpp"

namespace ubsb::tune {

using models::HyperParams;

enum class Scale { linear, log };

struct Domain {
  enum class Kind { continuous, integer, categorical };

  std::string name;
  Kind kind = Kind::continuous;
  double lo = 0.0;
  double hi = 1.0;
  Scale scale = Scale::linear;
  std::vector<double> choices;

  static Domain continuous(std::string name, double lo, double hi, Scale scale = Scale::linear);
  static Domain integer(std::string name, int lo, int hi);
  static Domain categorical(std::string name, std::vector<double> choices);

  bool contains(double v) const;
};

struct SearchSpace {
  std::vector<Domain> params;

  /// Throws std::invalid_argument: lo >= hi, non-positive log bounds, empty choices, duplicate names.
  void validate() const;
  nlohmann::json to_json() const;
};

struct Trial {
  int index = 0;
  HyperParams assignment;
  double auc = 0.5;
  /// Rounds kept by early stopping (boosted families only).
  int best_iteration = 0;

  nlohmann::json to_json() const;
};

struct TpeSettings {
  double gamma = 0.25;
  int n_candidates = 24;
  /// Below this many trials, suggestions come from the uniform prior.
  int n_startup = 10;
};

HyperParams sample_prior(const SearchSpace& space, RandomStream& rng);

/// Tree-structured Parzen estimator: the top gamma fraction of trials by AUC
/// form the good set; each parameter gets truncated Gaussian kernels with
/// bandwidth span / sqrt(count) (smoothed frequencies for categoricals); the
/// candidate with the largest good/bad density ratio wins.
HyperParams tpe_suggest(std::span<const Trial> history, const SearchSpace& space, RandomStream& rng,
                        const TpeSettings& settings = {});

struct Evaluation {
  double auc = 0.5;
  int best_iteration = 0;
  /// Scores on the evaluation rows, kept for the selected trial.
  std::vector<double> scores;
};

using Evaluator = std::function<Evaluation(const HyperParams&, int trial_index)>;

struct TuneResult {
  HyperParams best;
  int best_trial = -1;
  double best_auc = 0.0;
  int best_iteration = 0;
  std::vector<double> best_scores;
  std::vector<Trial> history;

  nlohmann::json history_json() const;
};

/// Sequential TPE; the winner is the first trial with the highest AUC.
TuneResult run_tpe(const SearchSpace& space, int n_trials, std::uint64_t seed, const Evaluator& evaluate,
                   const TpeSettings& settings = {});
/// Exhaustive grid; ties go to the earlier entry.
TuneResult run_grid(std::span<const HyperParams> grid, const Evaluator& evaluate);

/// Inner train / validation split of an outer training partition, encoded with
/// an encoder fitted on the inner training rows only.
struct InnerProblem {
  std::vector<std::size_t> train_idx;
  std::vector<std::size_t> valid_idx;
  encode::EncoderState encoder;
  encode::FeatureMatrix train;
  encode::FeatureMatrix valid;
  std::vector<int> train_labels;
  std::vector<int> valid_labels;
};

InnerProblem make_inner_problem(std::span<const Record> rows, const dataio::FeatureSet& features, encode::Mode mode,
                                const Date& reference_date, double train_fraction, std::uint64_t seed);

/// Fits `family` on the inner training rows and scores the inner validation rows.
Evaluator model_evaluator(models::Family family, const InnerProblem& problem, std::uint64_t seed);

SearchSpace default_space(models::Family family);
std::vector<HyperParams> default_grid(models::Family family);

struct TuneSettings {
  int n_trials = 50;
  double inner_fraction = 0.8;
  std::uint64_t seed = 0;
  TpeSettings tpe;
};

struct NestedTuneResult {
  TuneResult tuning;
  InnerProblem problem;
};

/// TPE over `space` on an inner split of `outer_train`.
NestedTuneResult nested_tune(std::span<const Record> outer_train, models::Family family,
                             const dataio::FeatureSet& features, const Date& reference_date, const SearchSpace& space,
                             const TuneSettings& settings);

/// Grid search on an inner split of `outer_train`.
NestedTuneResult grid_search(std::span<const Record> outer_train, models::Family family,
                             const dataio::FeatureSet& features, const Date& reference_date,
                             std::span<const HyperParams> grid, const TuneSettings& settings);

/// TPE for boosted families, grid search otherwise, with the default spaces.
NestedTuneResult tune_family(std::span<const Record> outer_train, models::Family family,
                             const dataio::FeatureSet& features, const Date& reference_date,
                             const TuneSettings& settings);

}  // namespace ubsb::tune
