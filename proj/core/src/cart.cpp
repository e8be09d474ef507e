#include "ubsb/cart.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ubsb/dataio.hpp"
#include "ubsb/error.hpp"
#include "ubsb/gbdt.hpp"
#include "ubsb/metrics.hpp"
#include "ubsb/parallel.hpp"

namespace ubsb::models {

double gini(double w_pos, double w_total) noexcept {
  if (!(w_total > 0.0)) return 0.0;
  const double p = w_pos / w_total;
  return 2.0 * p * (1.0 - p);
}

namespace {

struct CartNodeWork {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
};

struct BinCount {
  double wp = 0.0;
  double wn = 0.0;
  std::uint32_t n = 0;
};

void check_labels(std::span<const int> labels, std::size_t rows, const char* who) {
  if (labels.size() != rows) throw DataError(std::string(who) + ": label count does not match rows");
  const auto pos = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
  if (pos == 0 || static_cast<std::size_t>(pos) == labels.size()) {
    throw DataError(std::string(who) + ": both classes must be present");
  }
}

std::vector<double> resolve_weights(std::span<const int> labels, std::span<const double> weights, bool balanced) {
  if (!weights.empty()) {
    if (weights.size() != labels.size()) throw DataError("weights: length mismatch");
    return {weights.begin(), weights.end()};
  }
  std::vector<double> w(labels.size(), 1.0);
  if (balanced) {
    const auto cw = class_weights(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] ? cw.w_pos : cw.w_neg;
  }
  return w;
}

std::vector<double> predict_tree(const TreeModel& t, const encode::FeatureMatrix& x) {
  std::vector<double> out(x.n_rows);
  parallel_for(x.n_rows, [&](std::size_t i) { out[i] = clamp_prob(t.predict(x.row(i))); });
  return out;
}

}  // namespace

GrownTree grow_cart(const BinnedMatrix& x, std::span<const int> labels, std::span<const double> weights,
                    std::span<const std::uint32_t> rows_in, const CartGrowParams& params, RandomStream* rng) {
  GrownTree out;
  std::vector<std::uint32_t> rows(rows_in.begin(), rows_in.end());
  auto& nodes = out.tree.nodes;
  nodes.assign(1, TreeNode{});
  out.risk.assign(1, 0.0);
  double w_root = 0.0;
  for (auto r : rows) w_root += weights[r];
  if (!(w_root > 0.0)) w_root = 1.0;

  std::vector<int> all_cols(x.n_cols);
  std::iota(all_cols.begin(), all_cols.end(), 0);
  const int max_features =
      params.max_features <= 0 ? static_cast<int>(x.n_cols) : std::min<int>(params.max_features, static_cast<int>(x.n_cols));
  const auto msl = static_cast<std::uint32_t>(std::max(params.min_samples_leaf, 1));

  std::vector<CartNodeWork> stack{{0, 0, rows.size(), 0}};
  std::vector<BinCount> hist(256);
  while (!stack.empty()) {
    const CartNodeWork w = stack.back();
    stack.pop_back();
    double W = 0.0, Wp = 0.0;
    for (std::size_t i = w.begin; i < w.end; ++i) {
      const auto r = rows[i];
      W += weights[r];
      if (labels[r]) Wp += weights[r];
    }
    auto& node = nodes[static_cast<std::size_t>(w.node)];
    node.value = W > 0.0 ? Wp / W : 0.0;
    const double g = gini(Wp, W);
    out.risk[static_cast<std::size_t>(w.node)] = W / w_root * g;
    out.tree.depth = std::max(out.tree.depth, w.depth);
    const std::size_t n = w.end - w.begin;
    if (w.depth >= params.max_depth || n < 2 * static_cast<std::size_t>(msl) || g <= 1e-15) continue;

    std::vector<int> cols = all_cols;
    if (max_features < static_cast<int>(x.n_cols) && rng) {
      for (int i = 0; i < max_features; ++i) {
        const auto j = rng->uniform_int(i, static_cast<std::int64_t>(cols.size()) - 1);
        std::swap(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(j)]);
      }
      cols.resize(static_cast<std::size_t>(max_features));
      std::sort(cols.begin(), cols.end());
    }

    double best = -std::numeric_limits<double>::infinity();
    int best_col = -1, best_bin = -1;
    for (int c : cols) {
      const int nb = x.n_bins(static_cast<std::size_t>(c));
      if (nb < 2) continue;
      std::fill(hist.begin(), hist.begin() + nb, BinCount{});
      const std::uint8_t* codes = x.column(static_cast<std::size_t>(c));
      for (std::size_t i = w.begin; i < w.end; ++i) {
        const auto r = rows[i];
        auto& b = hist[codes[r]];
        (labels[r] ? b.wp : b.wn) += weights[r];
        ++b.n;
      }
      double lp = 0.0, ln = 0.0;
      std::uint32_t nl = 0;
      for (int b = 0; b + 1 < nb; ++b) {
        lp += hist[static_cast<std::size_t>(b)].wp;
        ln += hist[static_cast<std::size_t>(b)].wn;
        nl += hist[static_cast<std::size_t>(b)].n;
        if (nl < msl) continue;
        if (n - nl < msl) break;
        const double wl = lp + ln, wr = W - wl;
        const double decrease = W * g - wl * gini(lp, wl) - wr * gini(Wp - lp, wr);
        if (decrease > best) {
          best = decrease;
          best_col = c;
          best_bin = b;
        }
      }
    }
    if (best_col < 0) continue;

    const std::uint8_t* codes = x.column(static_cast<std::size_t>(best_col));
    auto first = rows.begin() + static_cast<std::ptrdiff_t>(w.begin);
    auto last = rows.begin() + static_cast<std::ptrdiff_t>(w.end);
    const auto mid = static_cast<std::size_t>(
        std::stable_partition(first, last, [&](std::uint32_t r) { return codes[r] <= best_bin; }) - rows.begin());
    const int left = static_cast<int>(nodes.size());
    node.feature = best_col;
    node.bin = best_bin;
    node.threshold = x.cuts[static_cast<std::size_t>(best_col)][static_cast<std::size_t>(best_bin)];
    node.left = left;
    node.right = left + 1;
    nodes.emplace_back();
    nodes.emplace_back();
    out.risk.resize(nodes.size(), 0.0);
    // Right first so the left subtree is expanded next.
    stack.push_back({left + 1, mid, w.end, w.depth + 1});
    stack.push_back({left, w.begin, mid, w.depth + 1});
  }
  return out;
}

PruningPath ccp_path(const GrownTree& grown) {
  const auto& nodes = grown.tree.nodes;
  const std::size_t n = nodes.size();
  std::vector<char> collapsed(n, 0);
  std::vector<int> parent(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!nodes[i].is_leaf()) {
      parent[static_cast<std::size_t>(nodes[i].left)] = static_cast<int>(i);
      parent[static_cast<std::size_t>(nodes[i].right)] = static_cast<int>(i);
    }
  }
  // Children always have larger indices than parents, so a reverse sweep is bottom-up.
  std::vector<double> sub_risk(n);
  std::vector<int> leaves(n);
  PruningPath path;
  double last_alpha = 0.0;
  auto active_leaf = [&](std::size_t i) { return nodes[i].is_leaf() || collapsed[i]; };
  auto reachable = [&](std::size_t i) {
    for (int p = parent[i]; p >= 0; p = parent[static_cast<std::size_t>(p)]) {
      if (collapsed[static_cast<std::size_t>(p)]) return false;
    }
    return true;
  };
  while (!active_leaf(0)) {
    for (std::size_t k = n; k-- > 0;) {
      if (active_leaf(k)) {
        sub_risk[k] = grown.risk[k];
        leaves[k] = 1;
      } else {
        const auto l = static_cast<std::size_t>(nodes[k].left), r = static_cast<std::size_t>(nodes[k].right);
        sub_risk[k] = sub_risk[l] + sub_risk[r];
        leaves[k] = leaves[l] + leaves[r];
      }
    }
    double best = std::numeric_limits<double>::infinity();
    int pick = -1;
    for (std::size_t k = 0; k < n; ++k) {
      if (active_leaf(k) || !reachable(k)) continue;
      const double g = (grown.risk[k] - sub_risk[k]) / static_cast<double>(leaves[k] - 1);
      if (g < best) {
        best = g;
        pick = static_cast<int>(k);
      }
    }
    last_alpha = std::max(last_alpha, best);
    collapsed[static_cast<std::size_t>(pick)] = 1;
    path.alphas.push_back(last_alpha);
    path.collapsed.push_back(pick);
  }
  return path;
}

TreeModel prune(const TreeModel& tree, const PruningPath& path, double alpha) {
  std::vector<char> collapsed(tree.nodes.size(), 0);
  for (std::size_t k = 0; k < path.alphas.size(); ++k) {
    if (path.alphas[k] <= alpha) collapsed[static_cast<std::size_t>(path.collapsed[k])] = 1;
  }
  TreeModel out;
  struct Item {
    int src;
    int dst;
    int depth;
  };
  out.nodes.push_back(tree.nodes[0]);
  std::vector<Item> stack{{0, 0, 0}};
  while (!stack.empty()) {
    const Item it = stack.back();
    stack.pop_back();
    const auto& src = tree.nodes[static_cast<std::size_t>(it.src)];
    out.depth = std::max(out.depth, it.depth);
    auto& dst = out.nodes[static_cast<std::size_t>(it.dst)];
    if (src.is_leaf() || collapsed[static_cast<std::size_t>(it.src)]) {
      dst.feature = -1;
      dst.bin = 0;
      dst.threshold = 0.0;
      dst.left = dst.right = -1;
      continue;
    }
    const int l = static_cast<int>(out.nodes.size());
    dst.left = l;
    dst.right = l + 1;
    out.nodes.push_back(tree.nodes[static_cast<std::size_t>(src.left)]);
    out.nodes.push_back(tree.nodes[static_cast<std::size_t>(src.right)]);
    stack.push_back({src.right, l + 1, it.depth + 1});
    stack.push_back({src.left, l, it.depth + 1});
  }
  return out;
}

std::vector<double> ccp_candidates(const PruningPath& path) {
  std::vector<double> distinct = path.alphas;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> out{0.0};
  for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
    const double a = distinct[i], b = distinct[i + 1];
    out.push_back(a > 0.0 ? std::sqrt(a * b) : 0.5 * b);
  }
  if (!distinct.empty()) out.push_back(distinct.back());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void DecisionTreeParams::validate() const {
  if (max_depth < 1) throw std::invalid_argument("decision tree: max_depth must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("decision tree: min_samples_leaf must be >= 1");
  if (cv_folds < 2) throw std::invalid_argument("decision tree: cv_folds must be >= 2");
  if (max_bins < 2 || max_bins > 256) throw std::invalid_argument("decision tree: max_bins must be in [2, 256]");
}

nlohmann::json DecisionTreeParams::to_json() const {
  return {{"max_depth", max_depth}, {"min_samples_leaf", min_samples_leaf}, {"cv_folds", cv_folds},
          {"balanced", balanced},   {"max_bins", max_bins},                 {"seed", seed}};
}

DecisionTreeParams DecisionTreeParams::from_json(const nlohmann::json& j) {
  DecisionTreeParams p;
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.cv_folds = j.at("cv_folds").get<int>();
  p.balanced = j.at("balanced").get<bool>();
  p.max_bins = j.at("max_bins").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.validate();
  return p;
}

std::vector<double> DecisionTreeModel::predict_proba(const encode::FeatureMatrix& x) const {
  return predict_tree(tree, x);
}

nlohmann::json DecisionTreeModel::to_json() const {
  return {{"params", params.to_json()}, {"tree", tree.to_json()}, {"ccp_alpha", ccp_alpha}};
}

DecisionTreeModel DecisionTreeModel::from_json(const nlohmann::json& j) {
  DecisionTreeModel m;
  m.params = DecisionTreeParams::from_json(j.at("params"));
  m.tree = TreeModel::from_json(j.at("tree"));
  m.ccp_alpha = j.at("ccp_alpha").get<double>();
  return m;
}

DecisionTreeModel fit_decision_tree(const encode::FeatureMatrix& x, std::span<const int> labels,
                                    std::span<const double> weights_in, const DecisionTreeParams& params) {
  params.validate();
  check_labels(labels, x.n_rows, "fit_decision_tree");
  const auto weights = resolve_weights(labels, weights_in, params.balanced);
  const BinnedMatrix xb = BinnedMatrix::build(x, params.max_bins);
  const CartGrowParams grow{params.max_depth, params.min_samples_leaf, 0};

  std::vector<std::uint32_t> all(x.n_rows);
  std::iota(all.begin(), all.end(), 0u);
  const GrownTree full = grow_cart(xb, labels, weights, all, grow, nullptr);
  const PruningPath path = ccp_path(full);
  const auto candidates = ccp_candidates(path);

  DecisionTreeModel model;
  model.params = params;
  if (candidates.size() > 1) {
    std::vector<int> y(labels.begin(), labels.end());
    const auto folds = dataio::stratified_kfold(y, params.cv_folds, mix_seed({params.seed, 0x43435000u}));
    std::vector<std::vector<double>> loss(static_cast<std::size_t>(params.cv_folds));
    parallel_for(static_cast<std::size_t>(params.cv_folds), [&](std::size_t f) {
      const auto train_idx = folds.train_indices(static_cast<int>(f));
      const auto test_idx = folds.test_indices(static_cast<int>(f));
      std::vector<std::uint32_t> rows(train_idx.begin(), train_idx.end());
      const GrownTree t = grow_cart(xb, labels, weights, rows, grow, nullptr);
      const PruningPath p = ccp_path(t);
      std::vector<int> ty;
      std::vector<double> tw;
      for (auto i : test_idx) {
        ty.push_back(labels[i]);
        tw.push_back(weights[i]);
      }
      for (double a : candidates) {
        const TreeModel pruned = prune(t.tree, p, a);
        std::vector<double> probs;
        probs.reserve(test_idx.size());
        for (auto i : test_idx) probs.push_back(pruned.predict(x.row(i)));
        loss[f].push_back(metrics::log_loss(probs, ty, tw));
      }
    });
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      double mean = 0.0;
      for (const auto& fl : loss) mean += fl[c];
      mean /= static_cast<double>(loss.size());
      if (mean <= best) {
        best = mean;
        model.ccp_alpha = candidates[c];
      }
    }
  }
  model.tree = prune(full.tree, path, model.ccp_alpha);
  return model;
}

void ForestParams::validate() const {
  if (n_trees < 1) throw std::invalid_argument("forest: n_trees must be >= 1");
  if (max_depth < 1) throw std::invalid_argument("forest: max_depth must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("forest: min_samples_leaf must be >= 1");
  if (max_features < 0) throw std::invalid_argument("forest: max_features must be >= 0");
  if (max_bins < 2 || max_bins > 256) throw std::invalid_argument("forest: max_bins must be in [2, 256]");
}

nlohmann::json ForestParams::to_json() const {
  return {{"n_trees", n_trees},         {"max_depth", max_depth}, {"min_samples_leaf", min_samples_leaf},
          {"max_features", max_features}, {"max_bins", max_bins},   {"seed", seed}};
}

ForestParams ForestParams::from_json(const nlohmann::json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.max_features = j.at("max_features").get<int>();
  p.max_bins = j.at("max_bins").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.validate();
  return p;
}

std::vector<double> ForestModel::predict_proba(const encode::FeatureMatrix& x) const {
  std::vector<double> out(x.n_rows);
  parallel_for(x.n_rows, [&](std::size_t i) {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x.row(i));
    out[i] = clamp_prob(trees.empty() ? 0.5 : s / static_cast<double>(trees.size()));
  });
  return out;
}

nlohmann::json ForestModel::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& tree : trees) t.push_back(tree.to_json());
  return {{"params", params.to_json()}, {"trees", t}};
}

ForestModel ForestModel::from_json(const nlohmann::json& j) {
  ForestModel m;
  m.params = ForestParams::from_json(j.at("params"));
  for (const auto& t : j.at("trees")) m.trees.push_back(TreeModel::from_json(t));
  return m;
}

std::vector<std::uint32_t> balanced_bootstrap(std::span<const int> labels, std::uint64_t seed, std::size_t tree_index) {
  std::vector<std::uint32_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(static_cast<std::uint32_t>(i));
  if (pos.empty() || neg.empty()) throw DataError("balanced_bootstrap: both classes must be present");
  RandomStream rng = RandomStream::derive(seed, StreamDomain::forest, tree_index);
  std::vector<std::uint32_t> out(labels.size());
  for (auto& r : out) {
    const auto& cls = rng.bernoulli(0.5) ? pos : neg;
    r = cls[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cls.size()) - 1))];
  }
  std::sort(out.begin(), out.end());
  return out;
}

ForestModel fit_random_forest(const encode::FeatureMatrix& x, std::span<const int> labels, const ForestParams& params,
                              bool compute_oob) {
  params.validate();
  check_labels(labels, x.n_rows, "fit_random_forest");
  const BinnedMatrix xb = BinnedMatrix::build(x, params.max_bins);
  const int mf = params.max_features > 0
                     ? params.max_features
                     : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(x.n_cols)))));
  const CartGrowParams grow{params.max_depth, params.min_samples_leaf, mf};
  const std::vector<double> unit(labels.size(), 1.0);

  ForestModel model;
  model.params = params;
  model.trees.resize(static_cast<std::size_t>(params.n_trees));
  std::vector<std::vector<std::uint32_t>> bags(compute_oob ? model.trees.size() : 0);
  parallel_for(model.trees.size(), [&](std::size_t t) {
    auto rows = balanced_bootstrap(labels, params.seed, t);
    RandomStream rng = RandomStream::derive(params.seed, StreamDomain::tree, t);
    model.trees[t] = grow_cart(xb, labels, unit, rows, grow, &rng).tree;
    if (compute_oob) bags[t] = std::move(rows);
  });

  if (compute_oob) {
    std::vector<double> sum(x.n_rows, 0.0);
    std::vector<int> count(x.n_rows, 0);
    std::vector<char> in_bag(x.n_rows);
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      std::fill(in_bag.begin(), in_bag.end(), 0);
      for (auto r : bags[t]) in_bag[r] = 1;
      for (std::size_t i = 0; i < x.n_rows; ++i) {
        if (in_bag[i]) continue;
        sum[i] += model.trees[t].predict(x.row(i));
        ++count[i];
      }
    }
    model.oob_scores.resize(x.n_rows);
    for (std::size_t i = 0; i < x.n_rows; ++i) {
      model.oob_scores[i] = count[i] ? sum[i] / count[i] : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return model;
}

}  // namespace ubsb::models
