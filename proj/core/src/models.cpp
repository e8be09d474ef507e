#include "ubsb/models.hpp"

#include <cmath>
#include <stdexcept>

#include "ubsb/error.hpp"

namespace ubsb::models {

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::gbdt_xgb:
      return "gbdt_xgb";
    case Family::gbdt_lgbm:
      return "gbdt_lgbm";
    case Family::gbdt_cat:
      return "gbdt_cat";
    case Family::logreg:
      return "logreg";
    case Family::random_forest:
      return "random_forest";
    case Family::decision_tree:
      return "decision_tree";
  }
  return "gbdt_xgb";
}

Family parse_family(std::string_view name) {
  for (Family f : all_families()) {
    if (to_string(f) == name) return f;
  }
  throw std::invalid_argument("unknown model family '" + std::string(name) + "'");
}

std::vector<Family> all_families() {
  return {Family::gbdt_xgb, Family::gbdt_lgbm,     Family::gbdt_cat,
          Family::logreg,   Family::random_forest, Family::decision_tree};
}

bool is_boosted(Family f) noexcept {
  return f == Family::gbdt_xgb || f == Family::gbdt_lgbm || f == Family::gbdt_cat;
}

encode::Mode encoder_mode(Family f) noexcept {
  return f == Family::logreg ? encode::Mode::linear : encode::Mode::tree;
}

nlohmann::json hyperparams_to_json(const HyperParams& hp) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : hp) j[k] = v;
  return j;
}

HyperParams hyperparams_from_json(const nlohmann::json& j) {
  HyperParams hp;
  for (const auto& [k, v] : j.items()) hp[k] = v.get<double>();
  return hp;
}

namespace {

int as_int(double v) { return static_cast<int>(std::lround(v)); }

[[noreturn]] void unknown_key(Family f, const std::string& key) {
  throw std::invalid_argument("hyperparameter '" + key + "' does not apply to " + std::string(to_string(f)));
}

GbdtPreset preset_of(Family f) {
  switch (f) {
    case Family::gbdt_xgb:
      return GbdtPreset::xgb_like;
    case Family::gbdt_lgbm:
      return GbdtPreset::lgbm_like;
    case Family::gbdt_cat:
      return GbdtPreset::cat_like;
    default:
      throw std::invalid_argument("family is not boosted");
  }
}

}  // namespace

GbdtParams gbdt_params(Family f, const HyperParams& hp, std::uint64_t seed) {
  GbdtParams p = GbdtParams::for_preset(preset_of(f));
  p.seed = seed;
  for (const auto& [k, v] : hp) {
    if (k == "learning_rate") {
      p.learning_rate = v;
    } else if (k == "max_depth") {
      p.max_depth = as_int(v);
    } else if (k == "max_leaves") {
      p.max_leaves = as_int(v);
    } else if (k == "l1_alpha") {
      p.l1_alpha = v;
    } else if (k == "l2_lambda") {
      p.l2_lambda = v;
    } else if (k == "row_subsample") {
      p.row_subsample = v;
    } else if (k == "col_subsample") {
      p.col_subsample = v;
    } else if (k == "min_child_weight") {
      p.min_child_weight = v;
    } else if (k == "min_gain_gamma") {
      p.min_gain_gamma = v;
    } else if (k == "n_rounds") {
      p.n_rounds_max = as_int(v);
    } else if (k == "early_stopping_rounds") {
      p.early_stopping_rounds = as_int(v);
    } else {
      unknown_key(f, k);
    }
  }
  p.validate();
  return p;
}

LogregParams logreg_params(const HyperParams& hp) {
  LogregParams p;
  for (const auto& [k, v] : hp) {
    if (k == "alpha_mix") {
      p.alpha_mix = v;
    } else if (k == "lambda") {
      p.lambda = v;
    } else if (k == "max_iter") {
      p.max_iter = as_int(v);
    } else {
      unknown_key(Family::logreg, k);
    }
  }
  p.validate();
  return p;
}

ForestParams forest_params(const HyperParams& hp, std::uint64_t seed) {
  ForestParams p;
  p.seed = seed;
  for (const auto& [k, v] : hp) {
    if (k == "n_trees") {
      p.n_trees = as_int(v);
    } else if (k == "max_depth") {
      p.max_depth = as_int(v);
    } else if (k == "min_samples_leaf") {
      p.min_samples_leaf = as_int(v);
    } else if (k == "max_features") {
      p.max_features = as_int(v);
    } else {
      unknown_key(Family::random_forest, k);
    }
  }
  p.validate();
  return p;
}

DecisionTreeParams decision_tree_params(const HyperParams& hp, std::uint64_t seed) {
  DecisionTreeParams p;
  p.seed = seed;
  for (const auto& [k, v] : hp) {
    if (k == "max_depth") {
      p.max_depth = as_int(v);
    } else if (k == "min_samples_leaf") {
      p.min_samples_leaf = as_int(v);
    } else if (k == "cv_folds") {
      p.cv_folds = as_int(v);
    } else {
      unknown_key(Family::decision_tree, k);
    }
  }
  p.validate();
  return p;
}

std::vector<double> TrainedModel::predict_proba(const encode::FeatureMatrix& x) const {
  if (x.n_cols != encoder.n_cols() || (!x.names.empty() && x.names != encoder.feature_names)) {
    throw DataError("predict_proba: matrix does not match the model's encoder");
  }
  return std::visit([&](const auto& m) { return m.predict_proba(x); }, body);
}

std::vector<double> TrainedModel::predict_proba(std::span<const Record> rows) const {
  return predict_proba(encode::transform(encoder, rows));
}

int TrainedModel::best_iteration() const {
  if (const auto* g = std::get_if<GbdtModel>(&body)) return g->best_iteration;
  return 0;
}

std::vector<double> TrainedModel::trace() const {
  if (const auto* g = std::get_if<GbdtModel>(&body)) return g->trace;
  return {};
}

nlohmann::json TrainedModel::to_json() const {
  nlohmann::json structure = std::visit([](const auto& m) { return m.to_json(); }, body);
  return {{"format", "ubsb-model/1"},
          {"family", to_string(family)},
          {"hyperparams", hyperparams_to_json(hyperparams)},
          {"threshold", threshold},
          {"encoder", encoder.to_json()},
          {"model", structure}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "ubsb-model/1") throw DataError("model file: unsupported format");
  TrainedModel t;
  t.family = parse_family(j.at("family").get<std::string>());
  t.hyperparams = hyperparams_from_json(j.at("hyperparams"));
  t.threshold = j.at("threshold").get<double>();
  t.encoder = encode::EncoderState::from_json(j.at("encoder"));
  const auto& m = j.at("model");
  switch (t.family) {
    case Family::gbdt_xgb:
    case Family::gbdt_lgbm:
    case Family::gbdt_cat:
      t.body = GbdtModel::from_json(m);
      break;
    case Family::logreg:
      t.body = LogregModel::from_json(m);
      break;
    case Family::random_forest:
      t.body = ForestModel::from_json(m);
      break;
    case Family::decision_tree:
      t.body = DecisionTreeModel::from_json(m);
      break;
  }
  return t;
}

TrainedModel fit_model(Family family, const encode::EncoderState& encoder, const encode::FeatureMatrix& train,
                       std::span<const int> labels, const HyperParams& hp, std::uint64_t seed,
                       const encode::FeatureMatrix* valid, std::span<const int> valid_labels) {
  if (train.n_cols != encoder.n_cols()) throw DataError("fit_model: matrix does not match encoder");
  if (encoder.mode != encoder_mode(family)) {
    throw DataError("fit_model: " + std::string(to_string(family)) + " needs " +
                    std::string(encode::to_string(encoder_mode(family))) + " encoding");
  }
  TrainedModel t;
  t.family = family;
  t.hyperparams = hp;
  t.encoder = encoder;
  switch (family) {
    case Family::gbdt_xgb:
    case Family::gbdt_lgbm:
    case Family::gbdt_cat:
      t.body = fit_gbdt(train, labels, gbdt_params(family, hp, seed), valid, valid_labels);
      break;
    case Family::logreg:
      t.body = fit_logreg(train, labels, {}, logreg_params(hp));
      break;
    case Family::random_forest:
      t.body = fit_random_forest(train, labels, forest_params(hp, seed));
      break;
    case Family::decision_tree:
      t.body = fit_decision_tree(train, labels, {}, decision_tree_params(hp, seed));
      break;
  }
  return t;
}

}  // namespace ubsb::models
