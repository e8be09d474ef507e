#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ubsb/ablation.hpp"
#include "ubsb/config.hpp"
#include "ubsb/dataio.hpp"
#include "ubsb/error.hpp"
#include "ubsb/explain.hpp"
#include "ubsb/lift.hpp"
#include "ubsb/manifest.hpp"
#include "ubsb/parallel.hpp"
#include "ubsb/random.hpp"
#include "ubsb/svg.hpp"
#include "ubsb/synthgen.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::set<std::string> kBoolFlags = {"smoke", "plots", "permute-labels"};
const std::set<std::string> kDirOutputs = {"ablate", "explain"};

fs::path manifest_path(const std::string& command, const fs::path& out) {
  if (kDirOutputs.count(command)) return out / "manifest.json";
  return fs::path(out.string() + ".manifest.json");
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw ubsb::Error("cannot open '" + p.string() + "' for writing");
    out << text;
    if (!out) throw ubsb::Error("write to '" + p.string() + "' failed");
  }
  fs::rename(tmp, p);
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

ubsb::synthgen::MarginalConfig load_config_or_usage(const std::string& path) {
  try {
    return ubsb::synthgen::load_config(path);
  } catch (const ubsb::ConfigError& e) {
    throw UsageError(e.what());
  }
}

std::vector<ubsb::Record> read_rows(const std::string& path) {
  auto ds = ubsb::dataio::read_csv(fs::path(path));
  ubsb::dataio::check_ids(ds.rows);
  return std::move(ds.rows);
}

std::vector<ubsb::models::Family> parse_families(const std::string& list) {
  std::vector<ubsb::models::Family> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      const auto f = ubsb::models::parse_family(item);
      if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    } catch (const std::invalid_argument&) {
      throw UsageError("unknown family '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("no families given");
  return out;
}

std::string join_families(const std::vector<ubsb::models::Family>& fs) {
  std::string s;
  for (auto f : fs) {
    if (!s.empty()) s += ',';
    s += ubsb::models::to_string(f);
  }
  return s;
}

void log(const std::string& line) { std::cerr << line << '\n'; }

struct Context {
  int threads = 1;
};

// generate

struct GenerateOpts {
  std::string config = UBSB_DEFAULT_CONFIG;
  std::size_t n = 0;
  std::uint64_t seed = 42;
  std::string out;
};

int cmd_generate(const GenerateOpts& o, const Context& ctx) {
  Stopwatch clock;
  const auto cfg = load_config_or_usage(o.config);
  const int threshold = ubsb::synthgen::resolve_threshold(cfg, o.seed);
  const auto profiles = ubsb::synthgen::generate(cfg, o.n, o.seed);
  ubsb::dataio::Dataset ds;
  ds.rows.reserve(profiles.size());
  for (const auto& p : profiles) ds.rows.push_back(p.record);
  std::ostringstream csv;
  ubsb::dataio::write_csv(ds, csv);
  write_text(o.out, csv.str());

  std::size_t pos = 0;
  for (const auto& r : ds.rows) pos += static_cast<std::size_t>(r.delinquency_FL);
  ubsb::RunManifest m;
  m.command = "generate";
  m.args = {{"config", o.config}, {"n", std::to_string(o.n)}, {"seed", std::to_string(o.seed)}, {"out", o.out}};
  m.config = {{"toml", ubsb::synthgen::to_toml(cfg)}, {"label_threshold", threshold}};
  m.seeds = {{"seed", o.seed}};
  m.add_input(o.config);
  m.add_output(o.out);
  m.threads = ctx.threads;
  m.versions = {{"generator", ubsb::synthgen::kGeneratorVersion}};
  m.wall_clock_seconds = clock.seconds();
  m.write(manifest_path("generate", o.out));
  log("generated " + std::to_string(ds.rows.size()) + " records, prevalence " +
      fmt(ds.rows.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(ds.rows.size())) + ", threshold " +
      std::to_string(threshold));
  return kExitOk;
}

// validate

struct ValidateOpts {
  std::string data;
  std::string config = UBSB_DEFAULT_CONFIG;
  std::string out;
};

int cmd_validate(const ValidateOpts& o, const Context& ctx) {
  Stopwatch clock;
  const auto cfg = load_config_or_usage(o.config);
  const auto rows = read_rows(o.data);
  const auto violations = ubsb::synthgen::validate_rows(rows, cfg);
  nlohmann::json list = nlohmann::json::array();
  std::map<std::string, std::size_t> by_rule;
  for (const auto& v : violations) {
    list.push_back({{"row", v.row}, {"id", v.id}, {"rule", v.rule}, {"detail", v.detail}});
    ++by_rule[v.rule];
  }
  const auto labels = ubsb::dataio::labels_of(rows);
  const double prevalence =
      rows.empty() ? 0.0 : std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(rows.size());
  const nlohmann::json report = {{"rows", rows.size()},
                                 {"prevalence", prevalence},
                                 {"violation_count", violations.size()},
                                 {"by_rule", by_rule},
                                 {"violations", list}};
  if (!o.out.empty()) {
    write_json(o.out, report);
    ubsb::RunManifest m;
    m.command = "validate";
    m.args = {{"data", o.data}, {"config", o.config}, {"out", o.out}};
    m.add_input(o.data);
    m.add_input(o.config);
    m.add_output(o.out);
    m.threads = ctx.threads;
    m.wall_clock_seconds = clock.seconds();
    m.write(manifest_path("validate", o.out));
  }
  std::cout << rows.size() << " rows, " << violations.size() << " violations, prevalence " << fmt(prevalence) << '\n';
  for (std::size_t i = 0; i < violations.size() && i < 20; ++i) {
    const auto& v = violations[i];
    std::cout << "  row " << v.row << " (id " << v.id << "): " << v.rule << ": " << v.detail << '\n';
  }
  return violations.empty() ? kExitOk : kExitRuntime;
}

// train

struct TrainOpts {
  std::string data;
  std::string config = UBSB_DEFAULT_CONFIG;
  std::string family = "gbdt_xgb";
  std::string features = "full";
  int trials = 50;
  std::uint64_t seed = 42;
  std::string out;
};

int cmd_train(const TrainOpts& o, const Context& ctx) {
  Stopwatch clock;
  const auto cfg = load_config_or_usage(o.config);
  const auto family = parse_families(o.family);
  if (family.size() != 1) throw UsageError("train takes exactly one family");
  ubsb::dataio::FeatureSet features;
  try {
    features = ubsb::dataio::FeatureSet::by_name(o.features);
  } catch (const ubsb::DataError& e) {
    throw UsageError(e.what());
  }
  const auto rows = read_rows(o.data);
  ubsb::tune::TuneSettings ts;
  ts.n_trials = o.trials;
  ts.seed = o.seed;
  const auto fit = ubsb::eval::fit_tuned(rows, family[0], features, cfg.reference_date, ts);
  write_json(o.out, fit.model.to_json());

  ubsb::RunManifest m;
  m.command = "train";
  m.args = {{"data", o.data},         {"config", o.config}, {"family", o.family}, {"features", o.features},
            {"trials", std::to_string(o.trials)}, {"seed", std::to_string(o.seed)}, {"out", o.out}};
  m.config = {{"hyperparams", ubsb::models::hyperparams_to_json(fit.model.hyperparams)},
              {"inner_auc", fit.tuned.tuning.best_auc},
              {"threshold", fit.model.threshold}};
  m.seeds = {{"seed", o.seed}};
  m.add_input(o.data);
  m.add_input(o.config);
  m.add_output(o.out);
  m.threads = ctx.threads;
  m.wall_clock_seconds = clock.seconds();
  m.write(manifest_path("train", o.out));
  log(std::string(ubsb::models::to_string(family[0])) + " on " + o.features + ": inner AUC " +
      fmt(fit.tuned.tuning.best_auc) + ", threshold " + fmt(fit.model.threshold));
  return kExitOk;
}

// ablate

struct AblateOpts {
  std::string data;
  std::string config = UBSB_DEFAULT_CONFIG;
  std::string families = "gbdt_xgb,gbdt_lgbm,gbdt_cat,logreg,random_forest,decision_tree";
  int folds = 5;
  int trials = 50;
  std::uint64_t seed = 42;
  std::string out;
  bool smoke = false;
  bool plots = false;
  bool permute = false;
};

int cmd_ablate(AblateOpts o, const Context& ctx) {
  Stopwatch clock;
  const auto cfg = load_config_or_usage(o.config);
  ubsb::eval::AblationSettings s;
  s.families = parse_families(o.families);
  if (o.smoke) {
    o.folds = 3;
    o.trials = 10;
  }
  s.folds = o.folds;
  s.n_trials = o.trials;
  s.seed = o.seed;
  s.permute_labels = o.permute;
  auto rows = read_rows(o.data);
  if (o.smoke) rows = ubsb::eval::smoke_sample(rows, o.seed);
  log("ablation: " + std::to_string(rows.size()) + " rows, " + std::to_string(s.folds) + " folds, " +
      std::to_string(s.n_trials) + " trials, " + std::to_string(ctx.threads) + " threads");
  const auto report = ubsb::eval::run_ablation(rows, cfg.reference_date, s, log);

  const fs::path dir = o.out;
  fs::create_directories(dir);
  write_text(dir / "metrics.csv", report.metrics_csv());
  write_json(dir / "delong.json", report.delong_json());
  write_json(dir / "report.json", report.to_json());
  ubsb::eval::write_oof_csv(report.oof, dir / "oof.csv");
  ubsb::RunManifest m;
  m.command = "ablate";
  m.args = {{"data", o.data},
            {"config", o.config},
            {"families", join_families(s.families)},
            {"folds", std::to_string(o.folds)},
            {"trials", std::to_string(o.trials)},
            {"seed", std::to_string(o.seed)},
            {"out", o.out},
            {"smoke", o.smoke ? "true" : "false"},
            {"plots", o.plots ? "true" : "false"},
            {"permute-labels", o.permute ? "true" : "false"}};
  m.config = s.to_json();
  m.config["rows"] = rows.size();
  m.seeds = {{"seed", o.seed}};
  m.add_input(o.data);
  m.add_input(o.config);
  for (const char* f : {"metrics.csv", "delong.json", "report.json", "oof.csv"}) m.add_output(dir / f);
  if (o.plots) {
    for (const auto& oof : report.oof) {
      const std::vector<ubsb::svg::Series> series = {ubsb::svg::roc_series("Demo", oof.demo_score, oof.labels),
                                                     ubsb::svg::roc_series("Full", oof.full_score, oof.labels)};
      const std::string name = std::string(ubsb::models::to_string(oof.family));
      const auto path = dir / ("roc_" + name + ".svg");
      write_text(path, ubsb::svg::line_chart("ROC " + name, "False positive rate", "True positive rate", series,
                                             {0, 1}, {0, 1}, true));
      m.add_output(path);
    }
  }
  m.threads = ctx.threads;
  m.wall_clock_seconds = clock.seconds();
  m.write(manifest_path("ablate", dir));
  std::cout << report.metrics_csv();
  for (const auto& r : report.results) {
    std::cout << ubsb::models::to_string(r.family) << ": delta AUC " << fmt(r.delong.delta) << ", p "
              << r.delong.p_value << '\n';
  }
  return kExitOk;
}

// lift

struct LiftOpts {
  std::string oof;
  double approval_rate = -1;
  double default_rate = -1;
  int bootstrap = 1000;
  std::uint64_t seed = 42;
  std::string family;
  std::string out;
  bool plots = false;
};

int cmd_lift(const LiftOpts& o, const Context& ctx) {
  Stopwatch clock;
  const bool approval = o.approval_rate >= 0;
  if (approval == (o.default_rate >= 0)) throw UsageError("give exactly one of --approval-rate and --default-rate");
  if (approval && !(o.approval_rate > 0 && o.approval_rate <= 100)) {
    throw UsageError("--approval-rate must be in (0, 100]");
  }
  if (!approval && !(o.default_rate < 100)) throw UsageError("--default-rate must be in [0, 100)");
  auto all = ubsb::eval::read_oof_csv(fs::path(o.oof));
  if (!o.family.empty()) {
    const auto wanted = parse_families(o.family);
    std::erase_if(all, [&](const auto& x) { return std::find(wanted.begin(), wanted.end(), x.family) == wanted.end(); });
    if (all.empty()) throw ubsb::DataError("no predictions for the requested families");
  }
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& oof : all) {
    const auto rep = approval ? ubsb::eval::lift_fixed_approval(oof, o.approval_rate, o.bootstrap, o.seed)
                              : ubsb::eval::lift_fixed_default(oof, o.default_rate, o.bootstrap, o.seed);
    reports.push_back(rep.to_json());
    std::cout << ubsb::models::to_string(oof.family) << ": good approvals " << fmt(rep.good_approvals.estimate) << " ["
              << fmt(rep.good_approvals.lo) << ", " << fmt(rep.good_approvals.hi) << "], bad rejections "
              << fmt(rep.bad_rejections.estimate) << " [" << fmt(rep.bad_rejections.lo) << ", "
              << fmt(rep.bad_rejections.hi) << "] per 100\n";
  }
  write_json(o.out, {{"reports", reports}});

  ubsb::RunManifest m;
  m.command = "lift";
  m.args = {{"oof", o.oof},
            {"bootstrap", std::to_string(o.bootstrap)},
            {"seed", std::to_string(o.seed)},
            {"out", o.out},
            {"plots", o.plots ? "true" : "false"}};
  if (!o.family.empty()) m.args["family"] = o.family;
  if (approval) {
    m.args["approval-rate"] = exact(o.approval_rate);
  } else {
    m.args["default-rate"] = exact(o.default_rate);
  }
  m.seeds = {{"seed", o.seed}};
  m.add_input(o.oof);
  m.add_output(o.out);
  if (o.plots) {
    for (const auto& oof : all) {
      ubsb::svg::Series good{"Good approvals", {}, {}}, bad{"Bad rejections", {}, {}};
      for (int r = 5; r <= 95; r += 5) {
        const auto rep = ubsb::eval::lift_fixed_approval(oof, r, 0, o.seed);
        good.x.push_back(r);
        good.y.push_back(rep.good_approvals.estimate);
        bad.x.push_back(r);
        bad.y.push_back(rep.bad_rejections.estimate);
      }
      double lo = 0, hi = 0;
      for (const auto* s : {&good, &bad}) {
        for (double y : s->y) {
          lo = std::min(lo, y);
          hi = std::max(hi, y);
        }
      }
      const double pad = std::max(0.5, 0.1 * (hi - lo));
      const std::vector<ubsb::svg::Series> series = {good, bad};
      const std::string name(ubsb::models::to_string(oof.family));
      const fs::path path = fs::path(o.out).replace_extension("").string() + "_" + name + ".svg";
      write_text(path, ubsb::svg::line_chart("Full - Demo lift, " + name, "Approval rate (%)", "Delta per 100",
                                             series, {0, 100}, {lo - pad, hi + pad}));
      m.add_output(path);
    }
  }
  m.threads = ctx.threads;
  m.wall_clock_seconds = clock.seconds();
  m.write(manifest_path("lift", o.out));
  return kExitOk;
}

// explain

struct ExplainOpts {
  std::string model;
  std::string data;
  std::size_t records = 100;
  int k = 4;
  std::uint64_t seed = 42;
  std::string out;
  int population = 50;
  int generations = 100;
};

int cmd_explain(const ExplainOpts& o, const Context& ctx) {
  Stopwatch clock;
  if (o.k < 1) throw UsageError("--k must be >= 1");
  ubsb::models::TrainedModel model;
  {
    std::ifstream in(o.model, std::ios::binary);
    if (!in) throw ubsb::DataError("cannot read '" + o.model + "'");
    try {
      model = ubsb::models::TrainedModel::from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw ubsb::DataError("malformed model '" + o.model + "': " + e.what());
    }
  }
  const auto rows = read_rows(o.data);
  const auto columns = ubsb::explain::default_mutable_columns();
  const auto domains = ubsb::explain::CfDomains::fit(rows, model.encoder.reference_date, columns);
  const auto probs = model.predict_proba(std::span<const ubsb::Record>(rows));

  std::vector<std::size_t> rejected;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (probs[i] >= model.threshold) rejected.push_back(i);
  }
  auto rng = ubsb::RandomStream::derive(o.seed, ubsb::StreamDomain::sampling, 0);
  const std::size_t take = std::min(o.records, rejected.size());
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i),
                                                            static_cast<std::int64_t>(rejected.size()) - 1));
    std::swap(rejected[i], rejected[j]);
  }
  rejected.resize(take);
  std::sort(rejected.begin(), rejected.end());
  std::vector<ubsb::Record> sample;
  for (auto i : rejected) sample.push_back(rows[i]);
  log("explaining " + std::to_string(sample.size()) + " rejected records");

  ubsb::explain::CfConfig cf;
  cf.k = o.k;
  cf.seed = o.seed;
  cf.population = o.population;
  cf.generations = o.generations;
  cf.validate();
  std::vector<ubsb::explain::CounterfactualSet> sets(sample.size());
  ubsb::parallel_for(sample.size(), [&](std::size_t i) {
    sets[i] = ubsb::explain::generate_counterfactuals(model, sample[i], domains, cf);
  });

  std::size_t valid = 0, reverified = 0, immutable_edits = 0, exhausted = 0;
  std::vector<ubsb::Record> check;
  for (const auto& s : sets) {
    exhausted += s.exhausted ? 1 : 0;
    for (const auto& c : s.candidates) {
      if (!c.valid) continue;
      ++valid;
      check.push_back(c.record);
      for (auto col : ubsb::dataio::FeatureSet::demo().columns) {
        if (ubsb::field_value(c.record, col) != ubsb::field_value(s.original, col)) ++immutable_edits;
      }
    }
  }
  if (!check.empty()) {
    const auto rescored = model.predict_proba(std::span<const ubsb::Record>(check));
    for (double p : rescored) reverified += p < model.threshold ? 1 : 0;
  }
  nlohmann::json profile;
  try {
    profile = ubsb::explain::flip_frequency(sets, columns).to_json();
  } catch (const ubsb::DataError&) {
    profile = {{"candidates", 0}, {"features", nlohmann::json::object()}};
  }
  const auto single = ubsb::explain::single_edit_flip_rate(ubsb::explain::model_scorer(model), model.threshold,
                                                           sample, domains, columns, 0);

  nlohmann::json sets_json = nlohmann::json::array();
  std::string text;
  for (const auto& s : sets) {
    sets_json.push_back(s.to_json());
    text += s.render_text();
  }
  const nlohmann::json summary = {
      {"records", sample.size()},
      {"rejected_available", std::count_if(probs.begin(), probs.end(), [&](double p) { return p >= model.threshold; })},
      {"valid_candidates", valid},
      {"reverified_candidates", reverified},
      {"reverified_share", valid ? static_cast<double>(reverified) / static_cast<double>(valid) : 0.0},
      {"immutable_edits", immutable_edits},
      {"exhausted_records", exhausted},
      {"single_edit_flip_rate", single.rate},
      {"config", cf.to_json()}};
  const fs::path dir = o.out;
  fs::create_directories(dir);
  write_json(dir / "counterfactuals.json", {{"threshold", model.threshold}, {"sets", sets_json}});
  write_text(dir / "counterfactuals.txt", text);
  write_json(dir / "flip_profile.json", profile);
  write_json(dir / "single_edit.json", single.to_json());
  write_json(dir / "summary.json", summary);

  ubsb::RunManifest m;
  m.command = "explain";
  m.args = {{"model", o.model},
            {"data", o.data},
            {"records", std::to_string(o.records)},
            {"k", std::to_string(o.k)},
            {"seed", std::to_string(o.seed)},
            {"out", o.out},
            {"population", std::to_string(o.population)},
            {"generations", std::to_string(o.generations)}};
  m.config = cf.to_json();
  m.seeds = {{"seed", o.seed}};
  m.add_input(o.model);
  m.add_input(o.data);
  for (const char* f : {"counterfactuals.json", "counterfactuals.txt", "flip_profile.json", "single_edit.json",
                        "summary.json"}) {
    m.add_output(dir / f);
  }
  m.threads = ctx.threads;
  m.wall_clock_seconds = clock.seconds();
  m.write(manifest_path("explain", dir));
  std::cout << sample.size() << " records, " << valid << " valid candidates (" << reverified
            << " re-verified), immutable edits " << immutable_edits << ", single-edit flip rate " << fmt(single.rate)
            << '\n';
  return kExitOk;
}

int dispatch(std::vector<std::string> args, bool allow_replay);

// replay

struct ReplayOpts {
  std::string manifest;
  std::string out;
};

int cmd_replay(const ReplayOpts& o, const Context& ctx) {
  const auto m = ubsb::RunManifest::read(o.manifest);
  if (const auto stale = m.stale_inputs(); !stale.empty()) {
    throw ubsb::DataError("input changed since the run: " + stale.front());
  }
  const auto it = m.args.find("out");
  if (it == m.args.end()) throw ubsb::DataError("manifest has no output argument");
  fs::path new_out = o.out;
  if (!kDirOutputs.count(m.command)) new_out = new_out / fs::path(it->second).filename();
  std::vector<std::string> args = {"--threads", std::to_string(ctx.threads), m.command};
  for (const auto& [k, v] : m.args) {
    if (kBoolFlags.count(k)) {
      if (v == "true") args.push_back("--" + k);
      continue;
    }
    args.push_back("--" + k);
    args.push_back(k == "out" ? new_out.string() : v);
  }
  const int code = dispatch(args, false);
  if (code != kExitOk) return code;
  const auto again = ubsb::RunManifest::read(manifest_path(m.command, new_out));
  const auto diffs = ubsb::compare_outputs(m, again);
  for (const auto& d : diffs) std::cout << "mismatch: " << d << '\n';
  std::cout << (diffs.empty() ? "replay identical" : "replay differs") << " (" << again.outputs.size()
            << " outputs)\n";
  return diffs.empty() ? kExitOk : kExitRuntime;
}

int dispatch(std::vector<std::string> args, bool allow_replay) {
  CLI::App app{"Alternative-data credit scoring benchmark", "ubsb"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (default: UBSB_THREADS, else all cores)")
      ->check(CLI::NonNegativeNumber);

  GenerateOpts gen;
  auto* g = app.add_subcommand("generate", "Generate a synthetic dataset");
  g->add_option("--config", gen.config, "Marginal config TOML")->check(CLI::ExistingFile);
  g->add_option("--n", gen.n, "Number of records")->required()->check(CLI::PositiveNumber);
  g->add_option("--seed", gen.seed, "Seed");
  g->add_option("--out", gen.out, "Output CSV")->required();

  ValidateOpts val;
  auto* v = app.add_subcommand("validate", "Check a dataset against schema and sanity rules");
  v->add_option("--data", val.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  v->add_option("--config", val.config, "Marginal config TOML")->check(CLI::ExistingFile);
  v->add_option("--out", val.out, "Report JSON");

  TrainOpts tr;
  auto* t = app.add_subcommand("train", "Tune and fit one model on a dataset");
  t->add_option("--data", tr.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  t->add_option("--config", tr.config, "Marginal config TOML")->check(CLI::ExistingFile);
  t->add_option("--family", tr.family, "Model family");
  t->add_option("--features", tr.features, "demo or full");
  t->add_option("--trials", tr.trials, "Tuning trials")->check(CLI::PositiveNumber);
  t->add_option("--seed", tr.seed, "Seed");
  t->add_option("--out", tr.out, "Model JSON")->required();

  AblateOpts ab;
  auto* a = app.add_subcommand("ablate", "Demo vs Full ablation with nested tuning");
  a->add_option("--data", ab.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  a->add_option("--config", ab.config, "Marginal config TOML")->check(CLI::ExistingFile);
  a->add_option("--families", ab.families, "Comma-separated model families");
  a->add_option("--folds", ab.folds, "Outer folds (>= 2)")->check(CLI::Range(2, 1000));
  a->add_option("--trials", ab.trials, "Tuning trials per fold")->check(CLI::PositiveNumber);
  a->add_option("--seed", ab.seed, "Seed");
  a->add_option("--out", ab.out, "Output directory")->required();
  a->add_flag("--smoke", ab.smoke, "10000-row sample, 3 folds, 10 trials");
  a->add_flag("--plots", ab.plots, "Write ROC plots");
  a->add_flag("--permute-labels", ab.permute, "Shuffle labels first (null control)");

  LiftOpts li;
  auto* l = app.add_subcommand("lift", "Full vs Demo lending lift from out-of-fold scores");
  l->add_option("--oof", li.oof, "Out-of-fold CSV from ablate")->required()->check(CLI::ExistingFile);
  auto* r_opt = l->add_option("--approval-rate", li.approval_rate, "Approval rate R (percent)");
  auto* t_opt = l->add_option("--default-rate", li.default_rate, "Target default rate T (percent)")
                    ->check(CLI::NonNegativeNumber);
  r_opt->excludes(t_opt);
  l->add_option("--bootstrap", li.bootstrap, "Bootstrap resamples B")->check(CLI::NonNegativeNumber);
  l->add_option("--seed", li.seed, "Seed");
  l->add_option("--family", li.family, "Restrict to these families");
  l->add_option("--out", li.out, "Report JSON")->required();
  l->add_flag("--plots", li.plots, "Write lift curves");

  ExplainOpts ex;
  auto* e = app.add_subcommand("explain", "Counterfactual audit of a trained model");
  e->add_option("--model", ex.model, "Model JSON")->required()->check(CLI::ExistingFile);
  e->add_option("--data", ex.data, "Dataset CSV (domains and records)")->required()->check(CLI::ExistingFile);
  e->add_option("--records", ex.records, "Rejected records to explain")->check(CLI::PositiveNumber);
  e->add_option("--k", ex.k, "Counterfactuals per record")->check(CLI::PositiveNumber);
  e->add_option("--seed", ex.seed, "Seed");
  e->add_option("--out", ex.out, "Output directory")->required();
  e->add_option("--population", ex.population, "Search population")->check(CLI::Range(2, 100000));
  e->add_option("--generations", ex.generations, "Search generations")->check(CLI::NonNegativeNumber);

  ReplayOpts rp;
  CLI::App* rep = nullptr;
  if (allow_replay) {
    rep = app.add_subcommand("replay", "Re-run a command from its manifest and compare outputs");
    rep->add_option("--manifest", rp.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", rp.out, "Directory for the replayed outputs")->required();
  }

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitUsage;
  }

  Context ctx;
  if (threads == 0) {
    if (const char* env = std::getenv("UBSB_THREADS"); env && *env) {
      try {
        threads = std::stoi(env);
      } catch (const std::exception&) {
        throw UsageError("UBSB_THREADS must be an integer");
      }
      if (threads < 1) throw UsageError("UBSB_THREADS must be >= 1");
    }
  }
  if (threads > 0) ubsb::set_thread_count(threads);
  ctx.threads = ubsb::thread_count();

  if (g->parsed()) return cmd_generate(gen, ctx);
  if (v->parsed()) return cmd_validate(val, ctx);
  if (t->parsed()) return cmd_train(tr, ctx);
  if (a->parsed()) return cmd_ablate(ab, ctx);
  if (l->parsed()) return cmd_lift(li, ctx);
  if (e->parsed()) return cmd_explain(ex, ctx);
  if (rep && rep->parsed()) return cmd_replay(rp, ctx);
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return dispatch(std::move(args), true);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ubsb::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
