#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "ubsb/encode.hpp"

namespace ubsb::models {

/// Internal nodes send a row left when row[feature] < threshold, which is the
/// same as bin(row[feature]) <= bin for the training cuts.
struct TreeNode {
  int feature = -1;
  int bin = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  bool is_leaf() const noexcept { return left < 0; }
};

struct TreeModel {
  std::vector<TreeNode> nodes;
  int depth = 0;

  int leaf_index(const double* row) const;
  double predict(const double* row) const { return nodes[static_cast<std::size_t>(leaf_index(row))].value; }
  std::size_t leaf_count() const;

  nlohmann::json to_json() const;
  static TreeModel from_json(const nlohmann::json& j);
};

/// Column-major 8-bit bin codes for histogram training.
struct BinnedMatrix {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::vector<double>> cuts;
  std::vector<std::uint8_t> codes;

  int n_bins(std::size_t col) const { return static_cast<int>(cuts[col].size()) + 1; }
  const std::uint8_t* column(std::size_t col) const { return codes.data() + col * n_rows; }

  /// Learns cuts from `matrix` (max_bins <= 256) and bins it.
  static BinnedMatrix build(const encode::FeatureMatrix& matrix, int max_bins);
  /// Bins `matrix` with existing cuts.
  static BinnedMatrix apply(const encode::FeatureMatrix& matrix, const std::vector<std::vector<double>>& cuts);
};

}  // namespace ubsb::models
