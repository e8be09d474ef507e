#include "ubsb/tree.hpp"

#include <stdexcept>

#include "ubsb/error.hpp"
#include "ubsb/parallel.hpp"

namespace ubsb::models {

int TreeModel::leaf_index(const double* row) const {
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = row[n.feature] < n.threshold ? n.left : n.right;
  }
  return i;
}

std::size_t TreeModel::leaf_count() const {
  std::size_t n = 0;
  for (const auto& node : nodes) n += node.is_leaf() ? 1 : 0;
  return n;
}

nlohmann::json TreeModel::to_json() const {
  nlohmann::json feature = nlohmann::json::array(), bin = nlohmann::json::array(),
                 threshold = nlohmann::json::array(), left = nlohmann::json::array(),
                 right = nlohmann::json::array(), value = nlohmann::json::array();
  for (const auto& n : nodes) {
    feature.push_back(n.feature);
    bin.push_back(n.bin);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"depth", depth}, {"feature", feature}, {"bin", bin},     {"threshold", threshold},
          {"left", left},   {"right", right},     {"value", value}};
}

TreeModel TreeModel::from_json(const nlohmann::json& j) {
  TreeModel t;
  t.depth = j.at("depth").get<int>();
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto bin = j.at("bin").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  const auto value = j.at("value").get<std::vector<double>>();
  const std::size_t n = feature.size();
  if (bin.size() != n || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
      n == 0) {
    throw DataError("tree: inconsistent node arrays");
  }
  t.nodes.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = t.nodes[i];
    node.feature = feature[i];
    node.bin = bin[i];
    node.threshold = threshold[i];
    node.left = left[i];
    node.right = right[i];
    node.value = value[i];
    if ((node.left < 0) != (node.right < 0)) throw DataError("tree: node with a single child");
    if (node.left >= static_cast<int>(n) || node.right >= static_cast<int>(n)) {
      throw DataError("tree: child index out of range");
    }
  }
  return t;
}

BinnedMatrix BinnedMatrix::build(const encode::FeatureMatrix& matrix, int max_bins) {
  if (max_bins < 2 || max_bins > 256) throw std::invalid_argument("max_bins must be in [2, 256]");
  return apply(matrix, encode::build_histogram_bins(matrix, max_bins));
}

BinnedMatrix BinnedMatrix::apply(const encode::FeatureMatrix& matrix, const std::vector<std::vector<double>>& cuts) {
  if (cuts.size() != matrix.n_cols) throw DataError("binning: cut count does not match column count");
  BinnedMatrix b;
  b.n_rows = matrix.n_rows;
  b.n_cols = matrix.n_cols;
  b.cuts = cuts;
  b.codes.resize(b.n_rows * b.n_cols);
  parallel_for(b.n_cols, [&](std::size_t j) {
    std::uint8_t* out = b.codes.data() + j * b.n_rows;
    const auto& c = b.cuts[j];
    for (std::size_t i = 0; i < b.n_rows; ++i) out[i] = static_cast<std::uint8_t>(encode::bin_of(c, matrix.at(i, j)));
  });
  return b;
}

}  // namespace ubsb::models
