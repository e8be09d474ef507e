#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ubsb/cart.hpp"
#include "ubsb/encode.hpp"
#include "ubsb/gbdt.hpp"
#include "ubsb/logreg.hpp"
#include "ubsb/schema.hpp"

namespace ubsb::models {

enum class Family { gbdt_xgb, gbdt_lgbm, gbdt_cat, logreg, random_forest, decision_tree };

std::string_view to_string(Family f) noexcept;
/// Throws std::invalid_argument for unknown names.
Family parse_family(std::string_view name);
std::vector<Family> all_families();
bool is_boosted(Family f) noexcept;
encode::Mode encoder_mode(Family f) noexcept;

/// Named hyperparameter values; integers are stored as doubles.
using HyperParams = std::map<std::string, double>;

nlohmann::json hyperparams_to_json(const HyperParams& hp);
HyperParams hyperparams_from_json(const nlohmann::json& j);

GbdtParams gbdt_params(Family f, const HyperParams& hp, std::uint64_t seed);
LogregParams logreg_params(const HyperParams& hp);
ForestParams forest_params(const HyperParams& hp, std::uint64_t seed);
DecisionTreeParams decision_tree_params(const HyperParams& hp, std::uint64_t seed);

using ModelBody = std::variant<GbdtModel, LogregModel, ForestModel, DecisionTreeModel>;

struct TrainedModel {
  Family family = Family::gbdt_xgb;
  HyperParams hyperparams;
  encode::EncoderState encoder;
  ModelBody body;
  /// Decision threshold: positive iff probability >= threshold.
  double threshold = 0.5;

  /// Throws DataError when the matrix columns differ from the encoder's.
  std::vector<double> predict_proba(const encode::FeatureMatrix& x) const;
  std::vector<double> predict_proba(std::span<const Record> rows) const;
  int best_iteration() const;
  std::vector<double> trace() const;

  nlohmann::json to_json() const;
  static TrainedModel from_json(const nlohmann::json& j);
};

/// Fits one family on an encoded matrix. Boosted families use `valid` for
/// early stopping when given; the other families ignore it.
TrainedModel fit_model(Family family, const encode::EncoderState& encoder, const encode::FeatureMatrix& train,
                       std::span<const int> labels, const HyperParams& hp, std::uint64_t seed,
                       const encode::FeatureMatrix* valid = nullptr, std::span<const int> valid_labels = {});

}  // namespace ubsb::models
