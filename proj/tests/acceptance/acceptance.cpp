// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--full] [--report DIR] [--work DIR] [--only N]
//
// The default profile runs the smoke-scale checks. --full runs the 100k,
// 5-fold, 50-trial ablation; --report reuses the output directory of such a
// run instead of repeating it.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ubsb/ablation.hpp"
#include "ubsb/config.hpp"
#include "ubsb/dataio.hpp"
#include "ubsb/gbdt.hpp"
#include "ubsb/lift.hpp"
#include "ubsb/logreg.hpp"
#include "ubsb/manifest.hpp"
#include "ubsb/metrics.hpp"
#include "ubsb/models.hpp"
#include "ubsb/random.hpp"
#include "ubsb/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ubsb;

namespace {

struct Options {
  bool full = false;
  std::string report;
  std::string work = "acceptance_work";
  int only = 0;
  std::string cli = UBSB_CLI;
  std::string config = UBSB_DEFAULT_CONFIG;
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string fmt_p(double p) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", p);
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

struct CliRun {
  int code = -1;
  double seconds = 0.0;
  std::string output;
};

CliRun run_cli(const Options& opt, const std::vector<std::string>& args, const fs::path& log) {
  std::string cmd = quote(opt.cli);
  for (const auto& a : args) cmd += " " + quote(a);
  cmd += " > " + quote(log.string()) + " 2>&1";
  Clock clock;
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.seconds = clock.seconds();
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!y[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j]) continue;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      pairs += 1;
    }
  }
  return num / pairs;
}

double quadratic_delong_variance(const std::vector<double>& a, const std::vector<double>& b,
                                 const std::vector<int>& y) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] ? pos : neg).push_back(i);
  auto psi = [](double x, double z) { return x > z ? 1.0 : x == z ? 0.5 : 0.0; };
  const double m = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());
  std::vector<double> v10a, v10b, v01a, v01b;
  for (auto i : pos) {
    double sa = 0, sb = 0;
    for (auto j : neg) {
      sa += psi(a[i], a[j]);
      sb += psi(b[i], b[j]);
    }
    v10a.push_back(sa / n);
    v10b.push_back(sb / n);
  }
  for (auto j : neg) {
    double sa = 0, sb = 0;
    for (auto i : pos) {
      sa += psi(a[i], a[j]);
      sb += psi(b[i], b[j]);
    }
    v01a.push_back(sa / m);
    v01b.push_back(sb / m);
  }
  auto cov = [](const std::vector<double>& u, const std::vector<double>& v) {
    const double k = static_cast<double>(u.size());
    const double mu = std::accumulate(u.begin(), u.end(), 0.0) / k;
    const double mv = std::accumulate(v.begin(), v.end(), 0.0) / k;
    double s = 0;
    for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - mu) * (v[i] - mv);
    return s / (k - 1);
  };
  const double s10 = cov(v10a, v10a) + cov(v10b, v10b) - 2 * cov(v10a, v10b);
  const double s01 = cov(v01a, v01a) + cov(v01b, v01b) - 2 * cov(v01a, v01b);
  return s10 / m + s01 / n;
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

// 1: oracle equivalences.
Outcome oracles() {
  std::ostringstream d;
  bool ok = true;

  Clock auc_clock;
  double auc_err = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto rng = RandomStream::derive(s, StreamDomain::sampling, 101);
    const auto n = static_cast<std::size_t>(rng.uniform_int(4, 500));
    const bool coarse = s % 2 == 0;
    std::vector<double> sc;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(i < 4 ? static_cast<int>(i % 2) : (rng.bernoulli(0.3) ? 1 : 0));
      const double v = rng.normal(y.back() ? 0.6 : 0.0, 1.0);
      sc.push_back(coarse ? std::round(v * 4) / 4 : v);
    }
    auc_err = std::max(auc_err, std::abs(metrics::roc_auc(sc, y) - pairwise_auc(sc, y)));
  }
  const double auc_time = auc_clock.seconds();
  ok = ok && auc_err <= 1e-12 && auc_time < 5.0;
  d << "auc max err " << auc_err << " in " << fmt(auc_time, 2) << " s";

  double var_err = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    auto rng = RandomStream::derive(s, StreamDomain::sampling, 202);
    const auto n = static_cast<std::size_t>(rng.uniform_int(6, 200));
    std::vector<double> a, b;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(i < 4 ? static_cast<int>(i % 2) : (rng.bernoulli(0.35) ? 1 : 0));
      const double shift = y.back() ? 0.8 : 0.0;
      const double va = rng.normal(shift, 1.0);
      a.push_back(s % 3 == 0 ? std::round(va * 3) / 3 : va);
      b.push_back(0.5 * va + rng.normal(shift, 0.9));
    }
    var_err = std::max(var_err, std::abs(metrics::delong_paired(a, b, y).variance - quadratic_delong_variance(a, b, y)));
  }
  ok = ok && var_err <= 1e-10;
  d << "; delong variance max err " << var_err;

  double gbdt_rel = 0;
  {
    auto rng = RandomStream::derive(3, StreamDomain::sampling, 303);
    auto loss = [](double m, int y, double w) {
      const double p = models::sigmoid(m);
      return -w * (y ? std::log(p) : std::log(1 - p));
    };
    for (int i = 0; i < 1000; ++i) {
      const double m = rng.uniform(-6, 6), w = rng.uniform(0.2, 3.0), h = 1e-5;
      const int y = rng.bernoulli(0.5) ? 1 : 0;
      const auto gh = models::logistic_grad_hess(models::sigmoid(m), y, w);
      const double fd = (loss(m + h, y, w) - loss(m - h, y, w)) / (2 * h);
      const double fd_h = (models::logistic_grad_hess(models::sigmoid(m + h), y, w).g -
                           models::logistic_grad_hess(models::sigmoid(m - h), y, w).g) /
                          (2 * h);
      gbdt_rel = std::max({gbdt_rel, relative_error(gh.g, fd), relative_error(gh.h, fd_h)});
    }
  }
  double logreg_rel = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto rng = RandomStream::derive(s, StreamDomain::sampling, 404);
    const std::size_t n = 150, cols = 4;
    encode::FeatureMatrix x;
    x.n_rows = n;
    x.n_cols = cols;
    std::vector<int> y;
    std::vector<double> w;
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.2;
      for (std::size_t c = 0; c < cols; ++c) {
        const double v = rng.normal(0, 1);
        x.values.push_back(v);
        z += (c % 2 ? -0.8 : 1.0) * v;
      }
      y.push_back(rng.bernoulli(1 / (1 + std::exp(-z))) ? 1 : 0);
      w.push_back(rng.uniform(0.5, 2.0));
    }
    std::vector<double> beta;
    for (std::size_t c = 0; c < cols; ++c) beta.push_back((rng.bernoulli(0.5) ? 1 : -1) * rng.uniform(0.05, 1.5));
    const double b0 = rng.normal(0, 0.5), lambda = 0.1, alpha = 0.5, h = 1e-5;
    const auto g = models::logreg_gradient(x, y, w, b0, beta, lambda, alpha);
    for (std::size_t j = 0; j <= cols; ++j) {
      auto plus = beta, minus = beta;
      double bp = b0, bm = b0;
      if (j == 0) {
        bp += h;
        bm -= h;
      } else {
        plus[j - 1] += h;
        minus[j - 1] -= h;
      }
      const double fd = (models::logreg_objective(x, y, w, bp, plus, lambda, alpha) -
                         models::logreg_objective(x, y, w, bm, minus, lambda, alpha)) /
                        (2 * h);
      logreg_rel = std::max(logreg_rel, relative_error(g[j], fd));
    }
  }
  ok = ok && gbdt_rel <= 1e-5 && logreg_rel <= 1e-5;
  d << "; boosted-loss grad rel err " << gbdt_rel << ", elastic-net grad rel err " << logreg_rel;

  const double analytic = 0.5 * std::erfc(-(1.0 / std::sqrt(2.0)) / std::sqrt(2.0));
  int covered = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto rng = RandomStream::derive(s, StreamDomain::sampling, 505);
    std::vector<double> sc;
    std::vector<int> y;
    for (int i = 0; i < 2000; ++i) {
      y.push_back(i < 1000 ? 1 : 0);
      sc.push_back(rng.normal(y.back() ? 1.0 : 0.0, 1.0));
    }
    const auto ci = metrics::bootstrap_ci(
        y,
        [&](std::span<const std::size_t> idx) {
          std::vector<double> ss;
          std::vector<int> yy;
          for (auto i : idx) {
            ss.push_back(sc[i]);
            yy.push_back(y[i]);
          }
          return metrics::roc_auc(ss, yy);
        },
        1000, s);
    covered += ci.lo <= analytic && analytic <= ci.hi;
  }
  ok = ok && covered >= 90;
  d << "; bootstrap covers " << fmt(analytic) << " in " << covered << "/100";
  return {ok, d.str()};
}

struct Shared {
  fs::path data;          // 100k default dataset
  fs::path smoke_dir;     // smoke ablation output
  fs::path report_dir;    // full ablation output, when available
};

// 2: generator integrity.
Outcome generator(const Options& opt, const fs::path& work, Shared& shared) {
  std::ostringstream d;
  const auto a = work / "gen_a.csv", b = work / "gen_b.csv";
  const auto ra = run_cli(opt, {"generate", "--n", "100000", "--seed", "42", "--out", a.string()}, work / "gen_a.log");
  const auto rb = run_cli(opt, {"generate", "--n", "100000", "--seed", "42", "--out", b.string()}, work / "gen_b.log");
  if (ra.code != 0 || rb.code != 0) return {false, "generate failed: " + ra.output + rb.output};
  shared.data = a;
  const bool identical = sha256_file(a) == sha256_file(b);
  const auto rv = run_cli(opt, {"validate", "--data", a.string(), "--out", (work / "validate.json").string()},
                          work / "validate.log");
  const auto report = read_json(work / "validate.json");
  const std::size_t violations = report.at("violations").size();

  const auto cfg = synthgen::load_config(opt.config);
  const auto rows = dataio::read_csv(a).rows;
  const auto labels = dataio::labels_of(rows);
  const double prevalence = std::accumulate(labels.begin(), labels.end(), 0.0) / static_cast<double>(labels.size());
  const auto plan = dataio::stratified_kfold(labels, 5, 42);
  const double expected = std::accumulate(labels.begin(), labels.end(), 0.0) / 5.0;
  double worst = 0;
  for (int f = 0; f < 5; ++f) {
    double pos = 0;
    for (auto i : plan.test_indices(f)) pos += labels[i];
    worst = std::max(worst, std::abs(pos - expected));
  }
  const bool ok = rv.code == 0 && violations == 0 && std::abs(prevalence - cfg.target_prevalence) <= 0.02 &&
                  worst <= 1.0 && identical && ra.seconds < 120.0;
  d << rows.size() << " rows, " << violations << " violations, prevalence " << fmt(prevalence) << " (target "
    << fmt(cfg.target_prevalence, 2) << "), worst fold positive deviation " << fmt(worst, 1) << " records, "
    << (identical ? "byte-identical reruns" : "reruns differ") << ", " << fmt(ra.seconds, 1) << " s";
  return {ok, d.str()};
}

struct FamilyRow {
  double auc_demo = 0, auc_full = 0, f1_demo = 0, f1_full = 0, p = 1;
};

std::map<std::string, FamilyRow> read_ablation(const fs::path& dir) {
  std::map<std::string, FamilyRow> out;
  std::ifstream in(dir / "metrics.csv");
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string fam, variant, auc, f1;
    std::getline(ss, fam, ',');
    std::getline(ss, variant, ',');
    std::getline(ss, auc, ',');
    std::getline(ss, f1, ',');
    auto& r = out[fam];
    (variant == "Demo" ? r.auc_demo : r.auc_full) = std::stod(auc);
    (variant == "Demo" ? r.f1_demo : r.f1_full) = std::stod(f1);
  }
  const auto delong = read_json(dir / "delong.json");
  for (auto& [fam, r] : out) r.p = delong.at(fam).at("p_value").get<double>();
  return out;
}

bool boosted(const std::string& fam) { return fam.rfind("gbdt_", 0) == 0; }

// 3: ablation uplift.
Outcome ablation(const Options& opt, const fs::path& work, Shared& shared) {
  std::ostringstream d;
  bool ok = true;
  shared.smoke_dir = work / "smoke";
  const auto smoke = run_cli(opt, {"ablate", "--data", shared.data.string(), "--smoke", "--seed", "42", "--out",
                                   shared.smoke_dir.string()},
                             work / "smoke.log");
  if (smoke.code != 0) return {false, "smoke ablate failed: " + smoke.output};
  const auto rows = read_ablation(shared.smoke_dir);
  bool smoke_ok = smoke.seconds <= 300.0 && rows.size() == 6;
  double worst_p = 0, min_gap = 1;
  for (const auto& [fam, r] : rows) {
    smoke_ok = smoke_ok && r.auc_full > r.auc_demo && r.p < 0.05;
    worst_p = std::max(worst_p, r.p);
    min_gap = std::min(min_gap, r.auc_full - r.auc_demo);
  }
  ok = ok && smoke_ok;
  d << "smoke: " << rows.size() << " families, min Full-Demo AUC " << fmt(min_gap) << ", max p " << fmt_p(worst_p)
    << ", " << fmt(smoke.seconds, 0) << " s";

  if (!opt.full && opt.report.empty()) return {ok, d.str()};

  fs::path dir = opt.report;
  double seconds = 0;
  if (dir.empty()) {
    dir = work / "full";
    const auto full = run_cli(opt, {"ablate", "--data", shared.data.string(), "--folds", "5", "--trials", "50",
                                    "--seed", "42", "--out", dir.string()},
                              work / "full.log");
    if (full.code != 0) return {false, d.str() + "; full ablate failed: " + full.output};
  }
  seconds = read_json(dir / "manifest.json").at("wall_clock_seconds").get<double>();
  shared.report_dir = dir;
  const auto full = read_ablation(dir);
  bool full_ok = full.size() == 6;
  std::string smallest;
  double smallest_gap = 1e9;
  for (const auto& [fam, r] : full) {
    const double gap = r.auc_full - r.auc_demo;
    if (gap < smallest_gap) {
      smallest_gap = gap;
      smallest = fam;
    }
    if (boosted(fam)) {
      full_ok = full_ok && gap >= 0.008 && r.f1_full - r.f1_demo >= 0.05 && r.p < 0.01;
      d << "; " << fam << " dAUC " << fmt(gap) << " dF1 " << fmt(r.f1_full - r.f1_demo) << " p " << fmt_p(r.p);
    }
  }
  full_ok = full_ok && smallest == "logreg" && seconds <= 7200.0;
  d << "; smallest uplift " << smallest << " (" << fmt(smallest_gap) << "); full run " << fmt(seconds / 60, 1)
    << " min";
  return {ok && full_ok, d.str()};
}

// 4: null-signal control.
Outcome null_control(const Options& opt) {
  const auto cfg = synthgen::load_config(opt.config);
  std::vector<Record> all;
  for (const auto& p : synthgen::generate(cfg, 100000, 42)) all.push_back(p.record);
  double worst = 0;
  int tests = 0, quiet = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const auto sample = eval::smoke_sample(all, s);
    eval::AblationSettings settings;
    settings.folds = 3;
    settings.n_trials = opt.full ? 10 : 3;
    settings.seed = s;
    settings.permute_labels = true;
    settings.keep_history = false;
    const auto rep = eval::run_ablation(sample, cfg.reference_date, settings);
    for (const auto& fr : rep.results) {
      worst = std::max({worst, std::abs(fr.demo.fold_mean.auc - 0.5), std::abs(fr.full.fold_mean.auc - 0.5)});
      ++tests;
      quiet += fr.delong.p_value > 0.05;
    }
  }
  const double share = static_cast<double>(quiet) / tests;
  std::ostringstream d;
  d << "20 permuted runs (" << (opt.full ? 10 : 3) << " trials), max |AUC - 0.5| " << fmt(worst) << ", DeLong p > 0.05 in "
    << quiet << "/" << tests << " family tests";
  return {worst <= 0.03 && share >= 0.9, d.str()};
}

// 5: lift sanity.
Outcome lift(const Options& opt, const fs::path& work, const Shared& shared) {
  std::ostringstream d;
  const auto base = shared.report_dir.empty() ? shared.smoke_dir : shared.report_dir;
  auto oof = eval::read_oof_csv(base / "oof.csv");
  bool zero_ok = true;
  for (auto o : oof) {
    o.full_score = o.demo_score;
    for (double r : {5.0, 10.0, 30.0}) {
      const auto rep = eval::lift_fixed_approval(o, r, 1000, 7);
      for (const auto& f : rep.folds) zero_ok = zero_ok && f.good_approvals_delta == 0 && f.bad_rejections_delta == 0;
      zero_ok = zero_ok && rep.good_approvals.lo == 0 && rep.good_approvals.hi == 0 && rep.bad_rejections.lo == 0 &&
                rep.bad_rejections.hi == 0;
    }
    const auto dr = eval::lift_fixed_default(o, 10, 1000, 7);
    zero_ok = zero_ok && dr.good_approvals.lo == 0 && dr.good_approvals.hi == 0;
  }
  d << (zero_ok ? "identical scores give zero deltas with CI [0,0]" : "identical scores give nonzero deltas");

  const auto out = work / "lift_r10.json";
  const auto run = run_cli(opt, {"lift", "--oof", (base / "oof.csv").string(), "--approval-rate", "10", "--bootstrap",
                                 "1000", "--seed", "42", "--out", out.string()},
                           work / "lift.log");
  if (run.code != 0) return {false, d.str() + "; lift failed: " + run.output};
  bool positive = true;
  const auto reports = read_json(out).at("reports");
  for (const auto& r : reports) {
    const auto& g = r.at("good_approvals_delta");
    const double est = g.at("estimate").get<double>(), lo = g.at("lo").get<double>(), hi = g.at("hi").get<double>();
    const auto family = r.at("family").get<std::string>();
    if (boosted(family)) positive = positive && est > 0 && lo > 0 && lo <= hi;
    d << "; " << family << " +" << fmt(est, 2) << " [" << fmt(lo, 2) << ", " << fmt(hi, 2)
      << "]";
  }
  const bool manifest = fs::exists(out.string() + ".manifest.json");
  d << " per 100 at r = 10% (" << (shared.report_dir.empty() ? "smoke" : "full")
    << " run; asserted for boosted families)";
  return {zero_ok && positive && manifest && !reports.empty(), d.str()};
}

Record parse_record(const std::string& line) {
  std::string csv;
  for (int i = 0; i < kColumnCount; ++i) {
    if (i) csv += ',';
    csv += column_name(static_cast<Column>(i));
  }
  std::istringstream in(csv + "\n" + line + "\n");
  return dataio::read_csv(in, "counterfactual").rows.at(0);
}

// 6: counterfactual audit.
Outcome counterfactuals(const Options& opt, const fs::path& work, const Shared& shared) {
  std::ostringstream d;
  fs::path train_data = shared.data;
  std::string trials = "50";
  if (!opt.full) {
    train_data = work / "cf_train.csv";
    dataio::Dataset ds;
    ds.rows = eval::smoke_sample(dataio::read_csv(shared.data).rows, 42);
    for (std::size_t i = 0; i < ds.rows.size(); ++i) ds.rows[i].id = static_cast<std::int64_t>(i + 1);
    dataio::write_csv(ds, train_data);
    trials = "10";
  }
  const auto model_path = work / "cf_model.json";
  const auto tr = run_cli(opt, {"train", "--data", train_data.string(), "--family", "gbdt_xgb", "--features", "full",
                                "--trials", trials, "--seed", "42", "--out", model_path.string()},
                          work / "cf_train.log");
  if (tr.code != 0) return {false, "train failed: " + tr.output};
  const auto dir = work / "cf";
  const auto ex = run_cli(opt, {"explain", "--model", model_path.string(), "--data", train_data.string(), "--records",
                                "100", "--k", "4", "--seed", "42", "--out", dir.string()},
                          work / "cf_explain.log");
  if (ex.code != 0) return {false, "explain failed: " + ex.output};

  const auto model = models::TrainedModel::from_json(read_json(model_path));
  const auto sets = read_json(dir / "counterfactuals.json").at("sets");
  const auto demo = dataio::FeatureSet::demo().columns;
  std::size_t valid = 0, flipped = 0, immutable = 0;
  for (const auto& s : sets) {
    const auto original = parse_record(s.at("original").get<std::string>());
    for (const auto& c : s.at("candidates")) {
      if (!c.at("valid").get<bool>()) continue;
      ++valid;
      const auto rec = parse_record(c.at("record").get<std::string>());
      const std::vector<Record> one{rec};
      flipped += model.predict_proba(std::span<const Record>(one))[0] < model.threshold;
      for (Column col : demo) immutable += field_value(rec, col) != field_value(original, col);
    }
  }
  const auto single = read_json(dir / "single_edit.json");
  const double share = valid ? static_cast<double>(flipped) / static_cast<double>(valid) : 0.0;
  d << sets.size() << " records, " << valid << " valid candidates, " << fmt(100 * share, 1) << "% re-verified, "
    << immutable << " immutable edits, single-edit flip rate " << fmt(single.at("rate").get<double>(), 3);
  return {sets.size() == 100 && valid > 0 && share >= 0.95 && immutable == 0 && single.contains("rate"), d.str()};
}

// 7: determinism under replay.
Outcome determinism(const Options& opt, const fs::path& work) {
  std::ostringstream d;
  const auto base = work / "det";
  fs::create_directories(base);
  const auto data = base / "data.csv", model = base / "model.json", ab = base / "ablate", lift_out = base / "lift.json",
             ex = base / "explain", val = base / "validate.json";
  const std::vector<std::pair<fs::path, std::vector<std::string>>> runs = {
      {fs::path(data.string() + ".manifest.json"),
       {"--threads", "1", "generate", "--n", "3000", "--seed", "9", "--out", data.string()}},
      {fs::path(val.string() + ".manifest.json"),
       {"--threads", "1", "validate", "--data", data.string(), "--out", val.string()}},
      {fs::path(model.string() + ".manifest.json"),
       {"--threads", "1", "train", "--data", data.string(), "--family", "gbdt_lgbm", "--trials", "4", "--seed", "3",
        "--out", model.string()}},
      {ab / "manifest.json",
       {"--threads", "1", "ablate", "--data", data.string(), "--families", "gbdt_xgb,logreg,random_forest", "--folds",
        "2", "--trials", "3", "--seed", "5", "--plots", "--out", ab.string()}},
      {fs::path(lift_out.string() + ".manifest.json"),
       {"--threads", "1", "lift", "--oof", (ab / "oof.csv").string(), "--approval-rate", "10", "--bootstrap", "200",
        "--seed", "2", "--plots", "--out", lift_out.string()}},
      {ex / "manifest.json",
       {"--threads", "1", "explain", "--model", model.string(), "--data", data.string(), "--records", "8", "--k", "3",
        "--seed", "4", "--out", ex.string()}},
  };
  bool ok = true;
  int identical = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& [manifest, args] = runs[i];
    const auto r = run_cli(opt, args, base / ("run" + std::to_string(i) + ".log"));
    if (r.code != 0) {
      ok = false;
      d << args[2] << " failed (exit " << r.code << "); ";
      continue;
    }
    const auto original = RunManifest::read(manifest);
    for (const char* threads : {"1", "3"}) {
      const auto replay_dir = base / ("replay_" + std::to_string(i) + "_" + threads);
      fs::remove_all(replay_dir);
      fs::create_directories(replay_dir);
      const auto rr = run_cli(opt, {"--threads", threads, "replay", "--manifest", manifest.string(), "--out",
                                    replay_dir.string()},
                              base / ("replay" + std::to_string(i) + "_" + threads + ".log"));
      bool same = rr.code == 0 && !original.outputs.empty();
      for (const auto& o : original.outputs) {
        const auto copy = replay_dir / fs::path(o.path).filename();
        same = same && fs::exists(copy) && slurp(copy) == slurp(o.path);
      }
      if (same) {
        ++identical;
      } else {
        ok = false;
        d << args[2] << " replay with " << threads << " threads differs; ";
      }
    }
  }
  d << identical << "/" << 2 * runs.size() << " replays byte-identical (1 and 3 threads)";
  return {ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Acceptance checks"};
  app.add_flag("--full", opt.full, "Run the 100k, 5-fold, 50-trial profile");
  app.add_option("--report", opt.report, "Existing full ablation output directory");
  app.add_option("--work", opt.work, "Scratch directory");
  app.add_option("--only", opt.only, "Run a single criterion")->check(CLI::Range(1, 7));
  app.add_option("--cli", opt.cli, "ubsb executable");
  CLI11_PARSE(app, argc, argv);
  if (const char* env = std::getenv("UBSB_ACCEPTANCE_FULL"); env && std::string(env) == "1") opt.full = true;

  const fs::path work = fs::absolute(opt.work);
  fs::create_directories(work);
  Shared shared;

  struct Criterion {
    int id;
    std::string title;
    std::set<int> needs;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "oracle equivalences", {}, [&] { return oracles(); }},
      {2, "generator integrity", {}, [&] { return generator(opt, work, shared); }},
      {3, "ablation uplift", {2}, [&] { return ablation(opt, work, shared); }},
      {4, "null-signal control", {}, [&] { return null_control(opt); }},
      {5, "lift sanity", {2, 3}, [&] { return lift(opt, work, shared); }},
      {6, "counterfactual audit", {2}, [&] { return counterfactuals(opt, work, shared); }},
      {7, "replay determinism", {}, [&] { return determinism(opt, work); }},
  };

  std::set<int> wanted;
  if (opt.only) {
    wanted.insert(opt.only);
    for (int n : criteria[static_cast<std::size_t>(opt.only - 1)].needs) wanted.insert(n);
  } else {
    for (const auto& c : criteria) wanted.insert(c.id);
  }
  std::cout << "profile: " << (opt.full ? "full" : opt.report.empty() ? "smoke" : "smoke + report " + opt.report)
            << std::endl;
  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.count(c.id)) continue;
    Outcome o;
    Clock clock;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.title << "  (" << o.detail
              << "; " << fmt(clock.seconds(), 0) << " s)" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
