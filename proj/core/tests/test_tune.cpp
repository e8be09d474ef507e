#include <gtest/gtest.h>

#include "test_util.hpp"
#include "ubsb/synthgen.hpp"
#include "ubsb/tune.hpp"

using namespace ubsb;
using namespace ubsb::tune;

namespace {

SearchSpace unit_space() { return {{Domain::continuous("x", 0.0, 1.0)}}; }

double bowl(double x) { return 1.0 - (x - 0.3) * (x - 0.3); }

std::vector<Trial> bowl_history(std::uint64_t seed, int n) {
  const auto space = unit_space();
  auto rng = RandomStream::derive(seed, StreamDomain::tpe, 99);
  std::vector<Trial> h;
  for (int i = 0; i < n; ++i) {
    Trial t;
    t.index = i;
    t.assignment = sample_prior(space, rng);
    t.auc = bowl(t.assignment.at("x"));
    h.push_back(t);
  }
  return h;
}

const std::vector<Record>& small_rows() {
  static const auto rows = [] {
    std::vector<Record> out;
    for (const auto& p : synthgen::generate(ubsb::testing::default_config(), 800, 3)) out.push_back(p.record);
    return out;
  }();
  return rows;
}

}  // namespace

TEST(Space, ValidationRejectsBadDomains) {
  EXPECT_THROW((SearchSpace{{Domain::continuous("a", 1.0, 1.0)}}.validate()), std::invalid_argument);
  EXPECT_THROW((SearchSpace{{Domain::continuous("a", 0.0, 1.0, Scale::log)}}.validate()), std::invalid_argument);
  EXPECT_THROW((SearchSpace{{Domain::categorical("a", {})}}.validate()), std::invalid_argument);
  EXPECT_THROW((SearchSpace{{Domain::integer("a", 1, 3), Domain::integer("a", 1, 3)}}.validate()),
               std::invalid_argument);
}

TEST(Tpe, ColdStartDrawsInsideBounds) {
  SearchSpace space{{Domain::continuous("lr", 0.01, 0.3, Scale::log), Domain::integer("depth", 4, 10),
                     Domain::categorical("c", {2.0, 7.0})}};
  auto rng = RandomStream::derive(1, StreamDomain::tpe, 0);
  for (int i = 0; i < 200; ++i) {
    const auto hp = tpe_suggest({}, space, rng);
    for (const auto& d : space.params) EXPECT_TRUE(d.contains(hp.at(d.name))) << d.name;
  }
}

TEST(Tpe, ConcentratesNearKnownOptimum) {
  int inside = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto h = bowl_history(s, 40);
    auto rng = RandomStream::derive(s, StreamDomain::tpe, 1000);
    const double x = tpe_suggest(h, unit_space(), rng).at("x");
    if (x >= 0.15 && x <= 0.45) ++inside;
  }
  EXPECT_GE(inside, 90);
}

TEST(Tpe, PrefersTheBetterCategory) {
  const SearchSpace space{{Domain::categorical("c", {0.0, 1.0})}};
  int good = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = run_tpe(space, 21, s, [](const HyperParams& hp, int) {
      return Evaluation{hp.at("c") == 1.0 ? 0.8 : 0.6, 0, {}};
    });
    auto rng = RandomStream::derive(s, StreamDomain::tpe, 5000);
    std::vector<Trial> first(r.history.begin(), r.history.begin() + 20);
    if (tpe_suggest(first, space, rng).at("c") == 1.0) ++good;
  }
  EXPECT_GE(good, 80);
}

TEST(Tpe, SingleTrialReturnsTheSoleDraw) {
  const auto r = run_tpe(unit_space(), 1, 4, [](const HyperParams& hp, int) {
    return Evaluation{bowl(hp.at("x")), 0, {}};
  });
  ASSERT_EQ(r.history.size(), 1u);
  EXPECT_EQ(r.best, r.history[0].assignment);
  EXPECT_EQ(r.best_trial, 0);
}

TEST(Tpe, DeterministicInSeed) {
  const auto eval = [](const HyperParams& hp, int) { return Evaluation{bowl(hp.at("x")), 0, {}}; };
  const auto a = run_tpe(unit_space(), 25, 9, eval);
  const auto b = run_tpe(unit_space(), 25, 9, eval);
  EXPECT_EQ(a.history_json(), b.history_json());
}

TEST(Grid, DominantConfigWins) {
  const std::vector<HyperParams> grid{{{"max_depth", 2}}, {{"max_depth", 8}}};
  const auto r = run_grid(grid, [](const HyperParams& hp, int) {
    return Evaluation{hp.at("max_depth") == 8 ? 0.9 : 0.7, 0, {}};
  });
  EXPECT_EQ(r.best.at("max_depth"), 8);
}

TEST(Grid, TiesGoToEarlierEntry) {
  const std::vector<HyperParams> grid{{{"a", 1}}, {{"a", 2}}, {{"a", 3}}};
  const auto r = run_grid(grid, [](const HyperParams&, int) { return Evaluation{0.75, 0, {}}; });
  EXPECT_EQ(r.best_trial, 0);
  EXPECT_EQ(r.best.at("a"), 1);
}

TEST(Grid, SingletonGrid) {
  const std::vector<HyperParams> grid{{{"a", 5}}};
  const auto r = run_grid(grid, [](const HyperParams&, int) { return Evaluation{0.5, 0, {}}; });
  EXPECT_EQ(r.best.at("a"), 5);
}

TEST(Grid, DeepTreeChosenOnInteractionData) {
  // Label depends on a three-way interaction that a depth-2 tree cannot express.
  auto rng = RandomStream::derive(2, StreamDomain::sampling, 0);
  InnerProblem p;
  std::vector<double> tv, vv;
  for (int i = 0; i < 1600; ++i) {
    const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform(), d = rng.uniform();
    const int y = ((a > 0.5) ^ (b > 0.5) ^ (c > 0.5)) ? 1 : 0;
    auto& dst = i < 1200 ? tv : vv;
    dst.insert(dst.end(), {a, b, c, d});
    (i < 1200 ? p.train_labels : p.valid_labels).push_back(y);
  }
  p.train = ubsb::testing::matrix(1200, 4, tv);
  p.valid = ubsb::testing::matrix(400, 4, vv);
  p.encoder.mode = encode::Mode::tree;
  p.encoder.feature_names = p.train.names;
  const std::vector<HyperParams> grid{{{"max_depth", 2}}, {{"max_depth", 8}}};
  const auto r = run_grid(grid, model_evaluator(models::Family::decision_tree, p, 1));
  EXPECT_EQ(r.best.at("max_depth"), 8);
}

TEST(Nested, DeterministicAndLeakFree) {
  const auto& rows = small_rows();
  TuneSettings s;
  s.n_trials = 4;
  s.seed = 7;
  const auto ref = ubsb::testing::default_config().reference_date;
  const auto a = nested_tune(rows, models::Family::gbdt_xgb, dataio::FeatureSet::full(), ref,
                             default_space(models::Family::gbdt_xgb), s);
  const auto b = nested_tune(rows, models::Family::gbdt_xgb, dataio::FeatureSet::full(), ref,
                             default_space(models::Family::gbdt_xgb), s);
  EXPECT_EQ(a.tuning.history_json(), b.tuning.history_json());
  EXPECT_EQ(a.problem.train_idx.size() + a.problem.valid_idx.size(), rows.size());
  for (auto i : a.problem.train_idx) EXPECT_LT(i, rows.size());
}

TEST(Nested, SingleTrial) {
  TuneSettings s;
  s.n_trials = 1;
  s.seed = 3;
  const auto r = nested_tune(small_rows(), models::Family::gbdt_lgbm, dataio::FeatureSet::demo(),
                             ubsb::testing::default_config().reference_date,
                             default_space(models::Family::gbdt_lgbm), s);
  ASSERT_EQ(r.tuning.history.size(), 1u);
  EXPECT_EQ(r.tuning.best, r.tuning.history[0].assignment);
}
