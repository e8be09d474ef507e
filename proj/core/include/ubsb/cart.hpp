#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ubsb/encode.hpp"
#include "ubsb/random.hpp"
#include "ubsb/tree.hpp"

namespace ubsb::models {

/// Gini impurity 2p(1 - p) of a node with positive weight `w_pos` out of `w_total`.
double gini(double w_pos, double w_total) noexcept;

struct CartGrowParams {
  int max_depth = 8;
  int min_samples_leaf = 1;
  /// Features tried per node; 0 means all.
  int max_features = 0;
};

/// Tree grown on `rows` (duplicates allowed). Node values hold the weighted
/// positive fraction for every node; `risk[t]` is (W_t / W_root) * gini_t.
struct GrownTree {
  TreeModel tree;
  std::vector<double> risk;
};

GrownTree grow_cart(const BinnedMatrix& x, std::span<const int> labels, std::span<const double> weights,
                    std::span<const std::uint32_t> rows, const CartGrowParams& params, RandomStream* rng);

/// Weakest-link pruning path: `alphas[k]` is the effective alpha at which
/// `collapsed[k]` becomes a leaf. Alphas are non-decreasing.
struct PruningPath {
  std::vector<double> alphas;
  std::vector<int> collapsed;
};

PruningPath ccp_path(const GrownTree& grown);
/// Subtree with every node collapsed whose path alpha is <= alpha, compacted.
TreeModel prune(const TreeModel& tree, const PruningPath& path, double alpha);

/// Alpha candidates: 0 for the full tree, then geometric means of
/// consecutive distinct path alphas, then the largest alpha (root only).
std::vector<double> ccp_candidates(const PruningPath& path);

struct DecisionTreeParams {
  int max_depth = 8;
  int min_samples_leaf = 1;
  int cv_folds = 5;
  bool balanced = true;
  int max_bins = 255;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static DecisionTreeParams from_json(const nlohmann::json& j);
};

struct DecisionTreeModel {
  DecisionTreeParams params;
  TreeModel tree;
  double ccp_alpha = 0.0;

  std::vector<double> predict_proba(const encode::FeatureMatrix& x) const;
  nlohmann::json to_json() const;
  static DecisionTreeModel from_json(const nlohmann::json& j);
};

/// Gini tree, pruned at the alpha minimizing weighted log-loss over inner
/// stratified folds (ties go to the larger alpha). Empty `weights` means
/// balanced class weights (or uniform when params.balanced is false).
DecisionTreeModel fit_decision_tree(const encode::FeatureMatrix& x, std::span<const int> labels,
                                    std::span<const double> weights, const DecisionTreeParams& params);

struct ForestParams {
  int n_trees = 500;
  int max_depth = 12;
  int min_samples_leaf = 1;
  /// Features tried per node; 0 means round(sqrt(n_cols)).
  int max_features = 0;
  int max_bins = 255;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static ForestParams from_json(const nlohmann::json& j);
};

struct ForestModel {
  ForestParams params;
  std::vector<TreeModel> trees;
  /// Out-of-bag mean probability per training row; NaN when a row was in every bag.
  std::vector<double> oob_scores;

  std::vector<double> predict_proba(const encode::FeatureMatrix& x) const;
  nlohmann::json to_json() const;
  static ForestModel from_json(const nlohmann::json& j);
};

/// Class-balanced bootstrap for one tree: each of the n draws picks a class
/// with probability 1/2, then a uniform member of that class.
std::vector<std::uint32_t> balanced_bootstrap(std::span<const int> labels, std::uint64_t seed, std::size_t tree_index);

ForestModel fit_random_forest(const encode::FeatureMatrix& x, std::span<const int> labels, const ForestParams& params,
                              bool compute_oob = false);

}  // namespace ubsb::models
