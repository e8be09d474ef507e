#include "ubsb/tune.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>

#include "ubsb/error.hpp"
#include "ubsb/metrics.hpp"

namespace ubsb::tune {
namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / kSqrt2); }

/// Bounds of the internal (sampling) space.
std::pair<double, double> internal_bounds(const Domain& d) {
  switch (d.kind) {
    case Domain::Kind::integer:
      return {d.lo - 0.5, d.hi + 0.5};
    case Domain::Kind::continuous:
      if (d.scale == Scale::log) return {std::log(d.lo), std::log(d.hi)};
      return {d.lo, d.hi};
    case Domain::Kind::categorical:
      break;
  }
  return {0.0, 1.0};
}

double to_internal(const Domain& d, double v) {
  return d.kind == Domain::Kind::continuous && d.scale == Scale::log ? std::log(v) : v;
}

double from_internal(const Domain& d, double u) {
  if (d.kind == Domain::Kind::integer) return std::clamp(std::round(u), d.lo, d.hi);
  if (d.scale == Scale::log) return std::clamp(std::exp(u), d.lo, d.hi);
  return std::clamp(u, d.lo, d.hi);
}

std::size_t choice_index(const Domain& d, double v) {
  for (std::size_t i = 0; i < d.choices.size(); ++i) {
    if (d.choices[i] == v) return i;
  }
  throw std::invalid_argument("value is not a choice of '" + d.name + "'");
}

/// Equal-weight mixture of Gaussians truncated to [lo, hi].
struct Parzen {
  std::vector<double> centers;
  double sigma = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  Parzen(std::vector<double> obs, double lo_, double hi_) : centers(std::move(obs)), lo(lo_), hi(hi_) {
    sigma = (hi - lo) / std::sqrt(static_cast<double>(std::max<std::size_t>(centers.size(), 1)));
  }

  double density(double u) const {
    double s = 0.0;
    for (double c : centers) {
      const double mass = normal_cdf((hi - c) / sigma) - normal_cdf((lo - c) / sigma);
      const double z = (u - c) / sigma;
      s += kInvSqrt2Pi * std::exp(-0.5 * z * z) / sigma / std::max(mass, 1e-300);
    }
    return s / static_cast<double>(centers.size());
  }

  double sample(RandomStream& rng) const {
    const auto k = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(centers.size()) - 1));
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double u = rng.normal(centers[k], sigma);
      if (u >= lo && u <= hi) return u;
    }
    return std::clamp(centers[k], lo, hi);
  }
};

std::vector<double> smoothed_frequencies(const Domain& d, const std::vector<const Trial*>& trials) {
  std::vector<double> p(d.choices.size(), 1.0);
  for (const Trial* t : trials) p[choice_index(d, t->assignment.at(d.name))] += 1.0;
  const double total = static_cast<double>(trials.size() + d.choices.size());
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace

Domain Domain::continuous(std::string name, double lo, double hi, Scale scale) {
  Domain d;
  d.name = std::move(name);
  d.kind = Kind::continuous;
  d.lo = lo;
  d.hi = hi;
  d.scale = scale;
  return d;
}

Domain Domain::integer(std::string name, int lo, int hi) {
  Domain d;
  d.name = std::move(name);
  d.kind = Kind::integer;
  d.lo = lo;
  d.hi = hi;
  return d;
}

Domain Domain::categorical(std::string name, std::vector<double> choices) {
  Domain d;
  d.name = std::move(name);
  d.kind = Kind::categorical;
  d.choices = std::move(choices);
  return d;
}

bool Domain::contains(double v) const {
  switch (kind) {
    case Kind::continuous:
      return v >= lo && v <= hi;
    case Kind::integer:
      return v >= lo && v <= hi && v == std::round(v);
    case Kind::categorical:
      return std::find(choices.begin(), choices.end(), v) != choices.end();
  }
  return false;
}

void SearchSpace::validate() const {
  std::set<std::string> names;
  for (const auto& d : params) {
    if (!names.insert(d.name).second) throw std::invalid_argument("search space: duplicate parameter '" + d.name + "'");
    if (d.kind == Domain::Kind::categorical) {
      if (d.choices.empty()) throw std::invalid_argument("search space: '" + d.name + "' has no choices");
      continue;
    }
    if (!(d.lo < d.hi)) throw std::invalid_argument("search space: '" + d.name + "' needs lo < hi");
    if (d.scale == Scale::log && !(d.lo > 0.0)) {
      throw std::invalid_argument("search space: log-scale '" + d.name + "' needs positive bounds");
    }
  }
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& d : params) {
    nlohmann::json j{{"name", d.name}};
    switch (d.kind) {
      case Domain::Kind::continuous:
        j["kind"] = "continuous";
        j["lo"] = d.lo;
        j["hi"] = d.hi;
        j["scale"] = d.scale == Scale::log ? "log" : "linear";
        break;
      case Domain::Kind::integer:
        j["kind"] = "integer";
        j["lo"] = d.lo;
        j["hi"] = d.hi;
        break;
      case Domain::Kind::categorical:
        j["kind"] = "categorical";
        j["choices"] = d.choices;
        break;
    }
    out.push_back(j);
  }
  return out;
}

nlohmann::json Trial::to_json() const {
  return {{"index", index},
          {"assignment", models::hyperparams_to_json(assignment)},
          {"auc", auc},
          {"best_iteration", best_iteration}};
}

HyperParams sample_prior(const SearchSpace& space, RandomStream& rng) {
  HyperParams hp;
  for (const auto& d : space.params) {
    if (d.kind == Domain::Kind::categorical) {
      hp[d.name] = d.choices[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(d.choices.size()) - 1))];
    } else {
      const auto [lo, hi] = internal_bounds(d);
      hp[d.name] = from_internal(d, rng.uniform(lo, hi));
    }
  }
  return hp;
}

HyperParams tpe_suggest(std::span<const Trial> history, const SearchSpace& space, RandomStream& rng,
                        const TpeSettings& settings) {
  space.validate();
  if (static_cast<int>(history.size()) < std::max(settings.n_startup, 2)) return sample_prior(space, rng);

  std::vector<const Trial*> sorted;
  for (const auto& t : history) sorted.push_back(&t);
  std::stable_sort(sorted.begin(), sorted.end(), [](const Trial* a, const Trial* b) { return a->auc > b->auc; });
  const std::size_t n = sorted.size();
  std::size_t n_good = static_cast<std::size_t>(std::ceil(settings.gamma * static_cast<double>(n)));
  n_good = std::clamp<std::size_t>(n_good, 1, n - 1);
  const std::vector<const Trial*> good(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n_good));
  const std::vector<const Trial*> bad(sorted.begin() + static_cast<std::ptrdiff_t>(n_good), sorted.end());

  struct Model {
    std::optional<Parzen> l, g;
    std::vector<double> pl, pg;
  };
  std::vector<Model> per_param;
  for (const auto& d : space.params) {
    Model m;
    if (d.kind == Domain::Kind::categorical) {
      m.pl = smoothed_frequencies(d, good);
      m.pg = smoothed_frequencies(d, bad);
    } else {
      const auto [lo, hi] = internal_bounds(d);
      std::vector<double> ug, ub;
      for (const Trial* t : good) ug.push_back(to_internal(d, t->assignment.at(d.name)));
      for (const Trial* t : bad) ub.push_back(to_internal(d, t->assignment.at(d.name)));
      m.l.emplace(std::move(ug), lo, hi);
      m.g.emplace(std::move(ub), lo, hi);
    }
    per_param.push_back(std::move(m));
  }

  HyperParams best;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < std::max(settings.n_candidates, 1); ++c) {
    HyperParams cand;
    double score = 0.0;
    for (std::size_t k = 0; k < space.params.size(); ++k) {
      const auto& d = space.params[k];
      const auto& m = per_param[k];
      if (d.kind == Domain::Kind::categorical) {
        const std::size_t i = rng.weighted_index(m.pl);
        cand[d.name] = d.choices[i];
        score += std::log(m.pl[i]) - std::log(m.pg[i]);
      } else {
        const double u = m.l->sample(rng);
        cand[d.name] = from_internal(d, u);
        score += std::log(std::max(m.l->density(u), 1e-300)) - std::log(std::max(m.g->density(u), 1e-300));
      }
    }
    if (score > best_score) {
      best_score = score;
      best = std::move(cand);
    }
  }
  return best;
}

nlohmann::json TuneResult::history_json() const {
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : history) trials.push_back(t.to_json());
  return {{"best_trial", best_trial},
          {"best_auc", best_auc},
          {"best_iteration", best_iteration},
          {"best", models::hyperparams_to_json(best)},
          {"trials", trials}};
}

namespace {

void record(TuneResult& r, const HyperParams& hp, int index, Evaluation ev) {
  Trial t;
  t.index = index;
  t.assignment = hp;
  t.auc = ev.auc;
  t.best_iteration = ev.best_iteration;
  r.history.push_back(t);
  if (r.best_trial < 0 || ev.auc > r.best_auc) {
    r.best_trial = index;
    r.best_auc = ev.auc;
    r.best = hp;
    r.best_iteration = ev.best_iteration;
    r.best_scores = std::move(ev.scores);
  }
}

}  // namespace

TuneResult run_tpe(const SearchSpace& space, int n_trials, std::uint64_t seed, const Evaluator& evaluate,
                   const TpeSettings& settings) {
  space.validate();
  if (n_trials < 1) throw std::invalid_argument("tuning needs at least one trial");
  TuneResult r;
  for (int i = 0; i < n_trials; ++i) {
    RandomStream rng = RandomStream::derive(seed, StreamDomain::tpe, static_cast<std::uint64_t>(i));
    const HyperParams hp = tpe_suggest(r.history, space, rng, settings);
    record(r, hp, i, evaluate(hp, i));
  }
  return r;
}

TuneResult run_grid(std::span<const HyperParams> grid, const Evaluator& evaluate) {
  if (grid.empty()) throw std::invalid_argument("grid search needs at least one configuration");
  TuneResult r;
  for (std::size_t i = 0; i < grid.size(); ++i) record(r, grid[i], static_cast<int>(i), evaluate(grid[i], static_cast<int>(i)));
  return r;
}

InnerProblem make_inner_problem(std::span<const Record> rows, const dataio::FeatureSet& features, encode::Mode mode,
                                const Date& reference_date, double train_fraction, std::uint64_t seed) {
  const auto labels = dataio::labels_of(rows);
  auto [train_idx, valid_idx] = dataio::stratified_split(labels, train_fraction, seed);
  InnerProblem p;
  std::vector<Record> train_rows, valid_rows;
  train_rows.reserve(train_idx.size());
  valid_rows.reserve(valid_idx.size());
  for (auto i : train_idx) {
    train_rows.push_back(rows[i]);
    p.train_labels.push_back(labels[i]);
  }
  for (auto i : valid_idx) {
    valid_rows.push_back(rows[i]);
    p.valid_labels.push_back(labels[i]);
  }
  p.encoder = encode::fit_encoder(train_rows, features, mode, reference_date);
  p.train = encode::transform(p.encoder, train_rows);
  p.valid = encode::transform(p.encoder, valid_rows);
  p.train_idx = std::move(train_idx);
  p.valid_idx = std::move(valid_idx);
  return p;
}

Evaluator model_evaluator(models::Family family, const InnerProblem& problem, std::uint64_t seed) {
  return [family, &problem, seed](const HyperParams& hp, int) {
    const auto model = models::fit_model(family, problem.encoder, problem.train, problem.train_labels, hp, seed,
                                         &problem.valid, problem.valid_labels);
    Evaluation ev;
    ev.scores = model.predict_proba(problem.valid);
    ev.auc = metrics::roc_auc(ev.scores, problem.valid_labels);
    ev.best_iteration = model.best_iteration();
    return ev;
  };
}

SearchSpace default_space(models::Family family) {
  using models::Family;
  SearchSpace s;
  s.params.push_back(Domain::continuous("learning_rate", 0.01, 0.3, Scale::log));
  switch (family) {
    case Family::gbdt_xgb:
      s.params.push_back(Domain::integer("max_depth", 4, 10));
      s.params.push_back(Domain::continuous("l2_lambda", 1e-3, 10.0, Scale::log));
      s.params.push_back(Domain::continuous("l1_alpha", 1e-3, 10.0, Scale::log));
      s.params.push_back(Domain::continuous("row_subsample", 0.6, 1.0));
      s.params.push_back(Domain::continuous("col_subsample", 0.6, 1.0));
      break;
    case Family::gbdt_lgbm:
      s.params.push_back(Domain::integer("max_leaves", 15, 63));
      s.params.push_back(Domain::continuous("l2_lambda", 1e-3, 10.0, Scale::log));
      s.params.push_back(Domain::continuous("l1_alpha", 1e-3, 10.0, Scale::log));
      break;
    case Family::gbdt_cat:
      s.params.push_back(Domain::integer("max_depth", 4, 10));
      s.params.push_back(Domain::continuous("l2_lambda", 1e-3, 10.0, Scale::log));
      s.params.push_back(Domain::continuous("row_subsample", 0.6, 1.0));
      break;
    default:
      throw std::invalid_argument("no TPE space for " + std::string(models::to_string(family)));
  }
  return s;
}

std::vector<HyperParams> default_grid(models::Family family) {
  using models::Family;
  std::vector<HyperParams> grid;
  switch (family) {
    case Family::random_forest:
      for (double leaf : {1.0, 5.0, 20.0}) grid.push_back({{"min_samples_leaf", leaf}});
      break;
    case Family::decision_tree:
      for (double leaf : {1.0, 10.0, 50.0, 200.0}) grid.push_back({{"min_samples_leaf", leaf}});
      break;
    case Family::logreg:
      for (double mix : {0.1, 0.5, 0.9}) {
        for (double lambda : {1e-4, 1e-3, 1e-2}) grid.push_back({{"alpha_mix", mix}, {"lambda", lambda}});
      }
      break;
    default:
      throw std::invalid_argument("no grid for " + std::string(models::to_string(family)));
  }
  return grid;
}

namespace {

std::uint64_t inner_split_seed(std::uint64_t seed) { return mix_seed({seed, 0x696e6e6572ull}); }

}  // namespace

NestedTuneResult nested_tune(std::span<const Record> outer_train, models::Family family,
                             const dataio::FeatureSet& features, const Date& reference_date, const SearchSpace& space,
                             const TuneSettings& settings) {
  NestedTuneResult r;
  r.problem = make_inner_problem(outer_train, features, models::encoder_mode(family), reference_date,
                                 settings.inner_fraction, inner_split_seed(settings.seed));
  r.tuning = run_tpe(space, settings.n_trials, settings.seed, model_evaluator(family, r.problem, settings.seed),
                     settings.tpe);
  return r;
}

NestedTuneResult grid_search(std::span<const Record> outer_train, models::Family family,
                             const dataio::FeatureSet& features, const Date& reference_date,
                             std::span<const HyperParams> grid, const TuneSettings& settings) {
  NestedTuneResult r;
  r.problem = make_inner_problem(outer_train, features, models::encoder_mode(family), reference_date,
                                 settings.inner_fraction, inner_split_seed(settings.seed));
  r.tuning = run_grid(grid, model_evaluator(family, r.problem, settings.seed));
  return r;
}

NestedTuneResult tune_family(std::span<const Record> outer_train, models::Family family,
                             const dataio::FeatureSet& features, const Date& reference_date,
                             const TuneSettings& settings) {
  if (models::is_boosted(family)) {
    return nested_tune(outer_train, family, features, reference_date, default_space(family), settings);
  }
  const auto grid = default_grid(family);
  return grid_search(outer_train, family, features, reference_date, grid, settings);
}

}  // namespace ubsb::tune
