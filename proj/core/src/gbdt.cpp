#include "ubsb/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ubsb/error.hpp"
#include "ubsb/metrics.hpp"
#include "ubsb/parallel.hpp"
#include "ubsb/random.hpp"

namespace ubsb::models {

std::string_view to_string(GbdtPreset p) noexcept {
  switch (p) {
    case GbdtPreset::xgb_like:
      return "xgb_like";
    case GbdtPreset::lgbm_like:
      return "lgbm_like";
    case GbdtPreset::cat_like:
      return "cat_like";
  }
  return "xgb_like";
}

GbdtPreset parse_gbdt_preset(std::string_view text) {
  if (text == "xgb_like") return GbdtPreset::xgb_like;
  if (text == "lgbm_like") return GbdtPreset::lgbm_like;
  if (text == "cat_like") return GbdtPreset::cat_like;
  throw std::invalid_argument("unknown gbdt preset '" + std::string(text) + "'");
}

GbdtParams GbdtParams::for_preset(GbdtPreset preset) {
  GbdtParams p;
  p.preset = preset;
  switch (preset) {
    case GbdtPreset::xgb_like:
      p.max_depth = 6;
      p.row_subsample = 0.8;
      p.col_subsample = 0.8;
      p.l1_alpha = 0.1;
      p.l2_lambda = 1.0;
      break;
    case GbdtPreset::lgbm_like:
      p.max_depth = -1;
      p.max_leaves = 31;
      p.goss = true;
      p.goss_top = 0.2;
      p.goss_rest = 0.1;
      p.l2_lambda = 0.0;
      break;
    case GbdtPreset::cat_like:
      p.max_depth = 6;
      p.row_subsample = 0.8;
      p.l2_lambda = 3.0;
      break;
  }
  return p;
}

void GbdtParams::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("gbdt params: " + what); };
  if (!(learning_rate >= 0.0 && learning_rate <= 1.0)) fail("learning_rate must be in [0, 1]");
  if (preset != GbdtPreset::lgbm_like && max_depth < 1) fail("max_depth must be >= 1");
  if (preset == GbdtPreset::lgbm_like && max_leaves < 2) fail("max_leaves must be >= 2");
  if (n_rounds_max < 1) fail("n_rounds_max must be >= 1");
  if (early_stopping_rounds < 1) fail("early_stopping_rounds must be >= 1");
  if (!(row_subsample > 0.0 && row_subsample <= 1.0)) fail("row_subsample must be in (0, 1]");
  if (!(col_subsample > 0.0 && col_subsample <= 1.0)) fail("col_subsample must be in (0, 1]");
  if (!(l1_alpha >= 0.0) || !(l2_lambda >= 0.0) || !(min_gain_gamma >= 0.0) || !(min_child_weight >= 0.0)) {
    fail("penalties must be non-negative");
  }
  if (goss) {
    if (!(goss_top > 0.0 && goss_top <= 1.0) || !(goss_rest > 0.0 && goss_rest <= 1.0)) {
      fail("goss fractions must be in (0, 1]");
    }
    if (goss_top + goss_rest > 1.0 + 1e-12) fail("goss_top + goss_rest must be <= 1");
  }
  if (max_bins < 2 || max_bins > 256) fail("max_bins must be in [2, 256]");
}

nlohmann::json GbdtParams::to_json() const {
  return {{"preset", to_string(preset)},
          {"learning_rate", learning_rate},
          {"max_depth", max_depth},
          {"max_leaves", max_leaves},
          {"n_rounds_max", n_rounds_max},
          {"early_stopping_rounds", early_stopping_rounds},
          {"row_subsample", row_subsample},
          {"col_subsample", col_subsample},
          {"l1_alpha", l1_alpha},
          {"l2_lambda", l2_lambda},
          {"min_gain_gamma", min_gain_gamma},
          {"min_child_weight", min_child_weight},
          {"goss", goss},
          {"goss_top", goss_top},
          {"goss_rest", goss_rest},
          {"balanced", balanced},
          {"max_bins", max_bins},
          {"seed", seed}};
}

GbdtParams GbdtParams::from_json(const nlohmann::json& j) {
  GbdtParams p;
  p.preset = parse_gbdt_preset(j.at("preset").get<std::string>());
  p.learning_rate = j.at("learning_rate").get<double>();
  p.max_depth = j.at("max_depth").get<int>();
  p.max_leaves = j.at("max_leaves").get<int>();
  p.n_rounds_max = j.at("n_rounds_max").get<int>();
  p.early_stopping_rounds = j.at("early_stopping_rounds").get<int>();
  p.row_subsample = j.at("row_subsample").get<double>();
  p.col_subsample = j.at("col_subsample").get<double>();
  p.l1_alpha = j.at("l1_alpha").get<double>();
  p.l2_lambda = j.at("l2_lambda").get<double>();
  p.min_gain_gamma = j.at("min_gain_gamma").get<double>();
  p.min_child_weight = j.at("min_child_weight").get<double>();
  p.goss = j.at("goss").get<bool>();
  p.goss_top = j.at("goss_top").get<double>();
  p.goss_rest = j.at("goss_rest").get<double>();
  p.balanced = j.at("balanced").get<bool>();
  p.max_bins = j.at("max_bins").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.validate();
  return p;
}

ClassWeights class_weights(std::span<const int> labels) {
  std::size_t pos = 0;
  for (int y : labels) pos += y ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DataError("class_weights: both classes must be present");
  const double n = static_cast<double>(labels.size());
  return {n / (2.0 * static_cast<double>(pos)), n / (2.0 * static_cast<double>(neg))};
}

double clamp_prob(double p) noexcept { return std::clamp(p, 1e-7, 1.0 - 1e-7); }

double sigmoid(double margin) noexcept {
  if (margin >= 0) return 1.0 / (1.0 + std::exp(-margin));
  const double e = std::exp(margin);
  return e / (1.0 + e);
}

GradHess logistic_grad_hess(double prob, int label, double weight) {
  const double p = clamp_prob(prob);
  return {weight * (p - (label ? 1.0 : 0.0)), weight * p * (1.0 - p)};
}

double soft_threshold(double g, double l1) noexcept {
  const double a = std::abs(g) - l1;
  if (a <= 0.0) return 0.0;
  return g > 0 ? a : -a;
}

namespace {

double score_term(double G, double H, double l1, double l2) noexcept {
  const double d = H + l2;
  if (!(d > 0.0)) return 0.0;
  const double t = soft_threshold(G, l1);
  return t * t / d;
}

}  // namespace

double split_gain(double GL, double HL, double GR, double HR, double l1, double l2, double gamma) noexcept {
  return 0.5 * (score_term(GL, HL, l1, l2) + score_term(GR, HR, l1, l2) - score_term(GL + GR, HL + HR, l1, l2)) -
         gamma;
}

double leaf_weight(double G, double H, double l1, double l2) noexcept {
  const double d = H + l2;
  if (!(d > 0.0)) return 0.0;
  return -soft_threshold(G, l1) / d;
}

namespace {

constexpr int kMaxBins = 256;

struct BinStat {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t n = 0;
};

using Histogram = std::vector<BinStat>;

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  int col = -1;
  int bin = -1;
  double GL = 0, HL = 0, GR = 0, HR = 0;
  bool found() const { return col >= 0; }
};

struct Leaf {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  int depth = 0;
  double G = 0.0;
  double H = 0.0;
  Histogram hist;
  Candidate best;
  std::size_t size() const { return end - begin; }
};

int leaf_of_binned(const TreeModel& t, const BinnedMatrix& x, std::size_t r) {
  int i = 0;
  while (!t.nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = t.nodes[static_cast<std::size_t>(i)];
    i = x.column(static_cast<std::size_t>(n.feature))[r] <= n.bin ? n.left : n.right;
  }
  return i;
}

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& x, const GbdtParams& p, const std::vector<double>& g, const std::vector<double>& h,
              std::vector<std::uint32_t> rows, std::vector<int> cols)
      : x_(x), p_(p), g_(g), h_(h), rows_(std::move(rows)), cols_(std::move(cols)) {}

  TreeModel build() {
    tree_.nodes.assign(1, TreeNode{});
    Leaf root;
    root.node = 0;
    root.begin = 0;
    root.end = rows_.size();
    for (auto r : rows_) {
      root.G += g_[r];
      root.H += h_[r];
    }
    switch (p_.preset) {
      case GbdtPreset::xgb_like:
        grow_depthwise(std::move(root));
        break;
      case GbdtPreset::lgbm_like:
        grow_leafwise(std::move(root));
        break;
      case GbdtPreset::cat_like:
        grow_symmetric(std::move(root));
        break;
    }
    return std::move(tree_);
  }

 private:
  bool may_split(int depth) const { return p_.max_depth <= 0 || depth < p_.max_depth; }

  Histogram scan(std::size_t begin, std::size_t end) const {
    Histogram hist(x_.n_cols * kMaxBins);
    parallel_for(cols_.size(), [&](std::size_t k) {
      const auto c = static_cast<std::size_t>(cols_[k]);
      const std::uint8_t* codes = x_.column(c);
      BinStat* out = hist.data() + c * kMaxBins;
      for (std::size_t i = begin; i < end; ++i) {
        const auto r = rows_[i];
        BinStat& b = out[codes[r]];
        b.g += g_[r];
        b.h += h_[r];
        ++b.n;
      }
    });
    return hist;
  }

  Histogram subtract(const Histogram& parent, const Histogram& child) const {
    Histogram out(parent.size());
    for (int c : cols_) {
      const std::size_t off = static_cast<std::size_t>(c) * kMaxBins;
      for (std::size_t b = 0; b < kMaxBins; ++b) {
        out[off + b].g = parent[off + b].g - child[off + b].g;
        out[off + b].h = parent[off + b].h - child[off + b].h;
        out[off + b].n = parent[off + b].n - child[off + b].n;
      }
    }
    return out;
  }

  Candidate best_split(const Leaf& leaf) const {
    Candidate best;
    for (int c : cols_) {
      const int nb = x_.n_bins(static_cast<std::size_t>(c));
      const BinStat* hist = leaf.hist.data() + static_cast<std::size_t>(c) * kMaxBins;
      double GL = 0.0, HL = 0.0;
      std::uint32_t nL = 0;
      const auto n = static_cast<std::uint32_t>(leaf.size());
      for (int b = 0; b + 1 < nb; ++b) {
        GL += hist[b].g;
        HL += hist[b].h;
        nL += hist[b].n;
        if (nL == 0) continue;
        if (nL == n) break;
        const double GR = leaf.G - GL, HR = leaf.H - HL;
        if (HL < p_.min_child_weight || HR < p_.min_child_weight) continue;
        const double gain = split_gain(GL, HL, GR, HR, p_.l1_alpha, p_.l2_lambda, p_.min_gain_gamma);
        if (gain > best.gain) best = {gain, c, b, GL, HL, GR, HR};
      }
    }
    return best;
  }

  void finalize(const Leaf& leaf) {
    tree_.nodes[static_cast<std::size_t>(leaf.node)].value =
        p_.learning_rate * leaf_weight(leaf.G, leaf.H, p_.l1_alpha, p_.l2_lambda);
    tree_.depth = std::max(tree_.depth, leaf.depth);
  }

  /// Splits `leaf` on (col, bin) and returns its two children with row ranges
  /// and sums set. Histograms are filled when `with_hist`.
  std::pair<Leaf, Leaf> split(Leaf& leaf, int col, int bin, bool with_hist) {
    const std::uint8_t* codes = x_.column(static_cast<std::size_t>(col));
    auto first = rows_.begin() + static_cast<std::ptrdiff_t>(leaf.begin);
    auto last = rows_.begin() + static_cast<std::ptrdiff_t>(leaf.end);
    auto mid = std::stable_partition(first, last, [&](std::uint32_t r) { return codes[r] <= bin; });
    const auto mid_idx = static_cast<std::size_t>(mid - rows_.begin());

    auto& node = tree_.nodes[static_cast<std::size_t>(leaf.node)];
    node.feature = col;
    node.bin = bin;
    node.threshold = x_.cuts[static_cast<std::size_t>(col)][static_cast<std::size_t>(bin)];
    const int left_id = static_cast<int>(tree_.nodes.size());
    node.left = left_id;
    node.right = left_id + 1;
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();

    Leaf l, r;
    l.node = left_id;
    r.node = left_id + 1;
    l.begin = leaf.begin;
    l.end = mid_idx;
    r.begin = mid_idx;
    r.end = leaf.end;
    l.depth = r.depth = leaf.depth + 1;
    for (std::size_t i = l.begin; i < l.end; ++i) {
      l.G += g_[rows_[i]];
      l.H += h_[rows_[i]];
    }
    r.G = leaf.G - l.G;
    r.H = leaf.H - l.H;
    if (with_hist) {
      if (l.size() <= r.size()) {
        l.hist = scan(l.begin, l.end);
        r.hist = subtract(leaf.hist, l.hist);
      } else {
        r.hist = scan(r.begin, r.end);
        l.hist = subtract(leaf.hist, r.hist);
      }
    }
    leaf.hist.clear();
    leaf.hist.shrink_to_fit();
    return {std::move(l), std::move(r)};
  }

  void grow_depthwise(Leaf root) {
    std::vector<Leaf> frontier;
    if (may_split(0)) {
      root.hist = scan(root.begin, root.end);
      root.best = best_split(root);
    }
    frontier.push_back(std::move(root));
    while (!frontier.empty()) {
      std::vector<Leaf> next;
      for (auto& leaf : frontier) {
        if (!may_split(leaf.depth) || !leaf.best.found() || !(leaf.best.gain > 0.0)) {
          finalize(leaf);
          continue;
        }
        const bool deeper = may_split(leaf.depth + 1);
        auto [l, r] = split(leaf, leaf.best.col, leaf.best.bin, deeper);
        if (deeper) {
          l.best = best_split(l);
          r.best = best_split(r);
        }
        next.push_back(std::move(l));
        next.push_back(std::move(r));
      }
      frontier = std::move(next);
    }
  }

  void grow_leafwise(Leaf root) {
    std::vector<Leaf> leaves;
    if (may_split(0)) {
      root.hist = scan(root.begin, root.end);
      root.best = best_split(root);
    }
    leaves.push_back(std::move(root));
    while (static_cast<int>(leaves.size()) < p_.max_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        const auto& c = leaves[i].best;
        if (!c.found() || !(c.gain > 0.0) || !may_split(leaves[i].depth)) continue;
        if (pick == leaves.size() || c.gain > leaves[pick].best.gain) pick = i;
      }
      if (pick == leaves.size()) break;
      Leaf leaf = std::move(leaves[pick]);
      leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
      const bool deeper = may_split(leaf.depth + 1);
      auto [l, r] = split(leaf, leaf.best.col, leaf.best.bin, deeper);
      if (deeper) {
        l.best = best_split(l);
        r.best = best_split(r);
      }
      leaves.push_back(std::move(l));
      leaves.push_back(std::move(r));
    }
    for (const auto& leaf : leaves) finalize(leaf);
  }

  /// Oblivious tree: one (column, bin) per level shared by every leaf.
  void grow_symmetric(Leaf root) {
    std::vector<Leaf> level;
    if (may_split(0)) root.hist = scan(root.begin, root.end);
    level.push_back(std::move(root));
    for (int depth = 0; may_split(depth); ++depth) {
      std::vector<double> total(x_.n_cols * kMaxBins, 0.0);
      std::vector<char> usable(x_.n_cols * kMaxBins, 0);
      for (const auto& leaf : level) {
        for (int c : cols_) {
          const int nb = x_.n_bins(static_cast<std::size_t>(c));
          const std::size_t off = static_cast<std::size_t>(c) * kMaxBins;
          double GL = 0.0, HL = 0.0;
          for (int b = 0; b + 1 < nb; ++b) {
            GL += leaf.hist[off + static_cast<std::size_t>(b)].g;
            HL += leaf.hist[off + static_cast<std::size_t>(b)].h;
            const double HR = leaf.H - HL;
            if (HL < p_.min_child_weight || HR < p_.min_child_weight) continue;
            total[off + static_cast<std::size_t>(b)] +=
                split_gain(GL, HL, leaf.G - GL, HR, p_.l1_alpha, p_.l2_lambda, 0.0);
            usable[off + static_cast<std::size_t>(b)] = 1;
          }
        }
      }
      int best_col = -1, best_bin = -1;
      double best_gain = 0.0;
      for (int c : cols_) {
        const int nb = x_.n_bins(static_cast<std::size_t>(c));
        const std::size_t off = static_cast<std::size_t>(c) * kMaxBins;
        for (int b = 0; b + 1 < nb; ++b) {
          if (!usable[off + static_cast<std::size_t>(b)]) continue;
          const double gain = total[off + static_cast<std::size_t>(b)] - p_.min_gain_gamma;
          if (gain > best_gain) {
            best_gain = gain;
            best_col = c;
            best_bin = b;
          }
        }
      }
      if (best_col < 0) break;
      const bool deeper = may_split(depth + 1);
      std::vector<Leaf> next;
      for (auto& leaf : level) {
        auto [l, r] = split(leaf, best_col, best_bin, deeper);
        next.push_back(std::move(l));
        next.push_back(std::move(r));
      }
      level = std::move(next);
    }
    for (const auto& leaf : level) finalize(leaf);
  }

  const BinnedMatrix& x_;
  const GbdtParams& p_;
  const std::vector<double>& g_;
  const std::vector<double>& h_;
  std::vector<std::uint32_t> rows_;
  std::vector<int> cols_;
  TreeModel tree_;
};

/// Uniform sample of `k` distinct values from `pool` (partial Fisher-Yates), sorted.
template <typename T>
std::vector<T> sample_without_replacement(std::vector<T> pool, std::size_t k, RandomStream& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(pool.size()) - 1));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

/// Selects this round's rows; GOSS rescales the sampled small-gradient rows in place.
std::vector<std::uint32_t> sample_rows(const GbdtParams& p, std::vector<double>& g, std::vector<double>& h,
                                       RandomStream& rng) {
  const std::size_t n = g.size();
  std::vector<std::uint32_t> all(n);
  std::iota(all.begin(), all.end(), 0u);
  if (p.goss) {
    const auto top_n = static_cast<std::size_t>(std::floor(p.goss_top * static_cast<double>(n)));
    const auto rest_n = static_cast<std::size_t>(std::floor(p.goss_rest * static_cast<double>(n)));
    auto by_grad = [&](std::uint32_t a, std::uint32_t b) {
      const double ga = std::abs(g[a]), gb = std::abs(g[b]);
      return ga != gb ? ga > gb : a < b;
    };
    if (top_n < n) std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(top_n), all.end(), by_grad);
    std::vector<std::uint32_t> top(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(top_n));
    std::vector<std::uint32_t> rest(all.begin() + static_cast<std::ptrdiff_t>(top_n), all.end());
    std::sort(rest.begin(), rest.end());
    auto picked = sample_without_replacement(std::move(rest), rest_n, rng);
    const double amp = (1.0 - p.goss_top) / p.goss_rest;
    for (auto r : picked) {
      g[r] *= amp;
      h[r] *= amp;
    }
    top.insert(top.end(), picked.begin(), picked.end());
    std::sort(top.begin(), top.end());
    return top;
  }
  if (p.row_subsample < 1.0) {
    if (p.preset == GbdtPreset::cat_like) {
      std::vector<std::uint32_t> out;
      for (auto r : all) {
        if (rng.bernoulli(p.row_subsample)) out.push_back(r);
      }
      return out;
    }
    const auto k = static_cast<std::size_t>(std::floor(p.row_subsample * static_cast<double>(n)));
    return sample_without_replacement(std::move(all), std::max<std::size_t>(k, 1), rng);
  }
  return all;
}

std::vector<int> sample_cols(const GbdtParams& p, std::size_t n_cols, RandomStream& rng) {
  std::vector<int> all(n_cols);
  std::iota(all.begin(), all.end(), 0);
  if (p.col_subsample >= 1.0) return all;
  const auto k = static_cast<std::size_t>(std::lround(p.col_subsample * static_cast<double>(n_cols)));
  return sample_without_replacement(std::move(all), std::max<std::size_t>(k, 1), rng);
}

}  // namespace

double GbdtModel::margin(const double* row, int n_trees) const {
  double m = base_margin;
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(n_trees, 0)), trees.size());
  for (std::size_t t = 0; t < k; ++t) m += trees[t].predict(row);
  return m;
}

std::vector<double> GbdtModel::predict_proba(const encode::FeatureMatrix& x) const {
  return predict_proba(x, best_iteration);
}

std::vector<double> GbdtModel::predict_proba(const encode::FeatureMatrix& x, int n_trees) const {
  std::vector<double> out(x.n_rows);
  parallel_for(x.n_rows, [&](std::size_t i) { out[i] = clamp_prob(sigmoid(margin(x.row(i), n_trees))); });
  return out;
}

nlohmann::json GbdtModel::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& tree : trees) t.push_back(tree.to_json());
  return {{"params", params.to_json()},     {"base_margin", base_margin},       {"trees", t},
          {"trace", trace},                 {"best_iteration", best_iteration}, {"rounds_trained", rounds_trained}};
}

GbdtModel GbdtModel::from_json(const nlohmann::json& j) {
  GbdtModel m;
  m.params = GbdtParams::from_json(j.at("params"));
  m.base_margin = j.at("base_margin").get<double>();
  for (const auto& t : j.at("trees")) m.trees.push_back(TreeModel::from_json(t));
  m.trace = j.at("trace").get<std::vector<double>>();
  m.best_iteration = j.at("best_iteration").get<int>();
  m.rounds_trained = j.at("rounds_trained").get<int>();
  if (m.best_iteration < 0 || m.best_iteration > m.rounds_trained ||
      m.rounds_trained != static_cast<int>(m.trees.size())) {
    throw DataError("gbdt: inconsistent iteration counts");
  }
  return m;
}

GbdtModel fit_gbdt(const encode::FeatureMatrix& train, std::span<const int> labels, const GbdtParams& params,
                   const encode::FeatureMatrix* valid, std::span<const int> valid_labels) {
  params.validate();
  if (labels.size() != train.n_rows) throw DataError("fit_gbdt: label count does not match rows");
  std::size_t pos = 0;
  for (int y : labels) pos += y ? 1 : 0;
  const std::size_t n = labels.size();
  if (pos == 0 || pos == n) throw DataError("fit_gbdt: both classes must be present");
  if (valid) {
    if (valid_labels.size() != valid->n_rows) throw DataError("fit_gbdt: validation label count mismatch");
    if (valid->n_cols != train.n_cols) throw DataError("fit_gbdt: validation column count mismatch");
    const auto vpos = static_cast<std::size_t>(std::count_if(valid_labels.begin(), valid_labels.end(),
                                                             [](int y) { return y != 0; }));
    if (vpos == 0 || vpos == valid_labels.size()) throw DataError("fit_gbdt: validation needs both classes");
  }

  GbdtModel model;
  model.params = params;
  model.base_margin = std::log(static_cast<double>(pos) / static_cast<double>(n - pos));

  const BinnedMatrix xb = BinnedMatrix::build(train, params.max_bins);
  BinnedMatrix vb;
  if (valid) vb = BinnedMatrix::apply(*valid, xb.cuts);

  const ClassWeights cw = params.balanced ? class_weights(labels) : ClassWeights{};
  std::vector<double> F(n, model.base_margin);
  std::vector<double> VF(valid ? valid->n_rows : 0, model.base_margin);
  std::vector<double> g(n), h(n);

  double best_auc = -1.0;
  for (int round = 0; round < params.n_rounds_max; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto gh = logistic_grad_hess(sigmoid(F[i]), labels[i], labels[i] ? cw.w_pos : cw.w_neg);
      g[i] = gh.g;
      h[i] = gh.h;
    }
    RandomStream rng = RandomStream::derive(params.seed, StreamDomain::gbdt, static_cast<std::uint64_t>(round));
    auto cols = sample_cols(params, xb.n_cols, rng);
    auto rows = sample_rows(params, g, h, rng);
    TreeModel tree = TreeBuilder(xb, params, g, h, std::move(rows), std::move(cols)).build();

    parallel_for(n, [&](std::size_t i) { F[i] += tree.nodes[static_cast<std::size_t>(leaf_of_binned(tree, xb, i))].value; });
    model.trees.push_back(std::move(tree));
    model.rounds_trained = round + 1;

    if (!valid) continue;
    const TreeModel& t = model.trees.back();
    parallel_for(VF.size(), [&](std::size_t i) { VF[i] += t.nodes[static_cast<std::size_t>(leaf_of_binned(t, vb, i))].value; });
    const double auc = metrics::roc_auc(VF, valid_labels);
    model.trace.push_back(auc);
    if (auc > best_auc) {
      best_auc = auc;
      model.best_iteration = round + 1;
    }
    if (model.rounds_trained - model.best_iteration >= params.early_stopping_rounds) break;
  }
  if (!valid) model.best_iteration = model.rounds_trained;
  return model;
}

}  // namespace ubsb::models
