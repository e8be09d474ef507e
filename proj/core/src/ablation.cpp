#include "ubsb/ablation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "ubsb/encode.hpp"
#include "ubsb/error.hpp"
#include "ubsb/parallel.hpp"
#include "ubsb/random.hpp"

namespace ubsb::eval {
namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_cell(std::string_view cell, const std::string& where) {
  T v{};
  const auto* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw DataError(where + ": cannot parse '" + std::string(cell) + "'");
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

constexpr std::string_view kOofHeader = "family,id,label,fold,demo_score,full_score";

}  // namespace

int OofPredictions::n_folds() const {
  int k = 0;
  for (int f : folds) k = std::max(k, f + 1);
  return k;
}

void OofPredictions::validate() const {
  const std::size_t n = ids.size();
  if (labels.size() != n || folds.size() != n || demo_score.size() != n || full_score.size() != n) {
    throw DataError("oof predictions: column lengths differ");
  }
  if (n == 0) throw DataError("oof predictions: empty");
  const int k = n_folds();
  if (k < 2) throw DataError("oof predictions: need at least two folds");
  std::vector<int> seen(static_cast<std::size_t>(k), 0);
  for (int f : folds) {
    if (f < 0) throw DataError("oof predictions: negative fold index");
    seen[static_cast<std::size_t>(f)] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) throw DataError("oof predictions: a fold has no rows");
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || static_cast<std::size_t>(pos) == n) throw DataError("oof predictions: both classes must be present");
}

void write_oof_csv(std::span<const OofPredictions> oof, std::ostream& out) {
  out << kOofHeader << '\n';
  for (const auto& o : oof) {
    const auto name = models::to_string(o.family);
    for (std::size_t i = 0; i < o.size(); ++i) {
      out << name << ',' << o.ids[i] << ',' << o.labels[i] << ',' << o.folds[i] << ',' << exact(o.demo_score[i])
          << ',' << exact(o.full_score[i]) << '\n';
    }
  }
}

void write_oof_csv(std::span<const OofPredictions> oof, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_oof_csv(oof, out);
  if (!out) throw Error("write to '" + path.string() + "' failed");
}

std::vector<OofPredictions> read_oof_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(source_name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kOofHeader) throw SchemaError(source_name + ": expected header '" + std::string(kOofHeader) + "'");
  std::vector<OofPredictions> out;
  std::map<std::string, std::size_t> slot;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    const std::string where = source_name + ": row " + std::to_string(row);
    if (cells.size() != 6) throw DataError(where + ": expected 6 cells");
    const std::string fam(cells[0]);
    auto it = slot.find(fam);
    if (it == slot.end()) {
      OofPredictions o;
      try {
        o.family = models::parse_family(fam);
      } catch (const std::invalid_argument& e) {
        throw DataError(where + ": " + e.what());
      }
      it = slot.emplace(fam, out.size()).first;
      out.push_back(std::move(o));
    }
    auto& o = out[it->second];
    o.ids.push_back(parse_cell<std::int64_t>(cells[1], where));
    const int label = parse_cell<int>(cells[2], where);
    if (label != 0 && label != 1) throw DataError(where + ": label must be 0 or 1");
    o.labels.push_back(label);
    o.folds.push_back(parse_cell<int>(cells[3], where));
    o.demo_score.push_back(parse_cell<double>(cells[4], where));
    o.full_score.push_back(parse_cell<double>(cells[5], where));
  }
  for (const auto& o : out) o.validate();
  if (out.empty()) throw DataError(source_name + ": no predictions");
  return out;
}

std::vector<OofPredictions> read_oof_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_oof_csv(in, path.string());
}

nlohmann::json Metrics::to_json() const {
  return {{"auc", auc}, {"f1", f1}, {"precision", precision}, {"recall", recall}};
}

nlohmann::json FoldResult::to_json(bool with_history) const {
  nlohmann::json j{{"fold", fold},
                   {"hyperparams", models::hyperparams_to_json(hyperparams)},
                   {"best_iteration", best_iteration},
                   {"inner_auc", inner_auc},
                   {"threshold", threshold},
                   {"metrics", metrics.to_json()}};
  if (with_history) j["tuning"] = tuning.history_json();
  return j;
}

nlohmann::json VariantResult::to_json(bool with_history) const {
  nlohmann::json f = nlohmann::json::array();
  for (const auto& r : folds) f.push_back(r.to_json(with_history));
  return {{"variant", variant}, {"fold_mean", fold_mean.to_json()}, {"pooled", pooled.to_json()}, {"folds", f}};
}

nlohmann::json AblationSettings::to_json() const {
  nlohmann::json fams = nlohmann::json::array();
  for (auto f : families) fams.push_back(models::to_string(f));
  return {{"families", fams},          {"folds", folds}, {"n_trials", n_trials}, {"inner_fraction", inner_fraction},
          {"seed", seed},              {"permute_labels", permute_labels}};
}

nlohmann::json AblationReport::delong_json() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& r : results) out[std::string(models::to_string(r.family))] = r.delong.to_json();
  return out;
}

nlohmann::json AblationReport::to_json() const {
  nlohmann::json fams = nlohmann::json::array();
  for (const auto& r : results) {
    fams.push_back({{"family", models::to_string(r.family)},
                    {"demo", r.demo.to_json(settings.keep_history)},
                    {"full", r.full.to_json(settings.keep_history)},
                    {"delta_auc", r.full.fold_mean.auc - r.demo.fold_mean.auc},
                    {"delta_f1", r.full.fold_mean.f1 - r.demo.fold_mean.f1},
                    {"delong", r.delong.to_json()}});
  }
  nlohmann::json folds = nlohmann::json::array();
  for (int f = 0; f < plan.k; ++f) folds.push_back(plan.test_indices(f).size());
  return {{"settings", settings.to_json()},
          {"reference_date", format_date(reference_date)},
          {"fold_plan", {{"k", plan.k}, {"seed", plan.seed}, {"fold_sizes", folds}}},
          {"results", fams}};
}

std::string AblationReport::metrics_csv() const {
  std::ostringstream out;
  out << "Model,Variant,AUC,F1,Precision,Recall\n";
  char buf[160];
  for (const auto& r : results) {
    for (const auto* v : {&r.demo, &r.full}) {
      std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.4f,%.4f\n", std::string(models::to_string(r.family)).c_str(),
                    v->variant.c_str(), v->fold_mean.auc, v->fold_mean.f1, v->fold_mean.precision,
                    v->fold_mean.recall);
      out << buf;
    }
  }
  return out.str();
}

std::vector<Record> smoke_sample(std::span<const Record> rows, std::uint64_t seed, std::size_t n) {
  if (rows.size() <= n) return {rows.begin(), rows.end()};
  const auto labels = dataio::labels_of(rows);
  const double fraction = static_cast<double>(n) / static_cast<double>(rows.size());
  auto idx = dataio::stratified_split(labels, fraction, mix_seed({seed, 0x736d6f6b65})).first;
  std::sort(idx.begin(), idx.end());
  std::vector<Record> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(rows[i]);
  return out;
}

std::vector<Record> permute_labels(std::span<const Record> rows, std::uint64_t seed) {
  std::vector<Record> out(rows.begin(), rows.end());
  std::vector<int> labels = dataio::labels_of(rows);
  RandomStream rng = RandomStream::derive(seed, StreamDomain::sampling, 0x7065726dull);
  for (std::size_t i = labels.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(labels[i - 1], labels[j]);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].delinquency_FL = labels[i];
  return out;
}

Metrics evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold) {
  Metrics m;
  m.auc = metrics::roc_auc(scores, labels);
  const auto preds = metrics::apply_threshold(scores, threshold);
  const auto prf = metrics::precision_recall_f1(preds, labels);
  m.precision = prf.precision;
  m.recall = prf.recall;
  m.f1 = prf.f1;
  return m;
}

namespace {

struct Task {
  std::size_t family_slot;
  int fold;
  bool full;
};

}  // namespace

TunedFit fit_tuned(std::span<const Record> rows, models::Family family, const dataio::FeatureSet& features,
                   const Date& ref, const tune::TuneSettings& settings) {
  auto nt = tune::tune_family(rows, family, features, ref, settings);
  models::HyperParams refit = nt.tuning.best;
  if (models::is_boosted(family)) refit["n_rounds"] = std::max(1, nt.tuning.best_iteration);
  const auto encoder = encode::fit_encoder(rows, features, models::encoder_mode(family), ref);
  const auto x = encode::transform(encoder, rows);
  const auto y = dataio::labels_of(rows);
  auto model = models::fit_model(family, encoder, x, y, refit, settings.seed);
  model.threshold = metrics::select_threshold_max_f1(nt.tuning.best_scores, nt.problem.valid_labels);
  return {std::move(model), std::move(nt)};
}

namespace {

FoldResult run_fold(std::span<const Record> rows, const dataio::FoldPlan& plan, models::Family family, int fold,
                    const dataio::FeatureSet& features, const Date& ref, const AblationSettings& s,
                    std::uint64_t fold_seed, std::vector<double>& held_out_scores) {
  const auto train_idx = plan.train_indices(fold);
  const auto test_idx = plan.test_indices(fold);
  std::vector<Record> outer_train, held_out;
  outer_train.reserve(train_idx.size());
  held_out.reserve(test_idx.size());
  for (auto i : train_idx) outer_train.push_back(rows[i]);
  for (auto i : test_idx) held_out.push_back(rows[i]);

  tune::TuneSettings ts;
  ts.n_trials = s.n_trials;
  ts.inner_fraction = s.inner_fraction;
  ts.seed = fold_seed;
  auto fit = fit_tuned(outer_train, family, features, ref, ts);
  auto& nt = fit.tuned;
  const auto& model = fit.model;
  const auto& encoder = model.encoder;

  for (auto i : nt.problem.train_idx) {
    if (plan.assignments[train_idx[i]] == fold) throw std::logic_error("tuning touched a held-out row");
  }
  for (auto i : nt.problem.valid_idx) {
    if (plan.assignments[train_idx[i]] == fold) throw std::logic_error("tuning touched a held-out row");
  }

  FoldResult r;
  r.fold = fold;
  r.hyperparams = nt.tuning.best;
  r.best_iteration = nt.tuning.best_iteration;
  r.inner_auc = nt.tuning.best_auc;
  r.threshold = model.threshold;

  held_out_scores = model.predict_proba(encode::transform(encoder, held_out));
  r.metrics = evaluate_scores(held_out_scores, dataio::labels_of(held_out), r.threshold);
  r.tuning = std::move(nt.tuning);
  r.tuning.best_scores.clear();
  return r;
}

void aggregate(VariantResult& v, const dataio::FoldPlan& plan, std::span<const int> labels,
               std::span<const double> oof_scores) {
  const double k = static_cast<double>(v.folds.size());
  for (const auto& f : v.folds) {
    v.fold_mean.auc += f.metrics.auc / k;
    v.fold_mean.f1 += f.metrics.f1 / k;
    v.fold_mean.precision += f.metrics.precision / k;
    v.fold_mean.recall += f.metrics.recall / k;
  }
  std::vector<int> preds(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    preds[i] = oof_scores[i] >= v.folds[static_cast<std::size_t>(plan.assignments[i])].threshold ? 1 : 0;
  }
  const auto prf = metrics::precision_recall_f1(preds, labels);
  v.pooled.auc = metrics::roc_auc(oof_scores, labels);
  v.pooled.f1 = prf.f1;
  v.pooled.precision = prf.precision;
  v.pooled.recall = prf.recall;
}

}  // namespace

AblationReport run_ablation(std::span<const Record> input, const Date& reference_date,
                            const AblationSettings& settings, const ProgressFn& progress) {
  if (settings.folds < 2) throw std::invalid_argument("ablation needs at least two folds");
  if (settings.families.empty()) throw std::invalid_argument("ablation needs at least one family");
  if (settings.n_trials < 1) throw std::invalid_argument("ablation needs at least one trial");
  std::vector<Record> rows =
      settings.permute_labels ? permute_labels(input, settings.seed) : std::vector<Record>(input.begin(), input.end());
  const auto labels = dataio::labels_of(rows);

  AblationReport report;
  report.settings = settings;
  report.reference_date = reference_date;
  report.plan = dataio::stratified_kfold(labels, settings.folds, settings.seed);
  dataio::check_fold_prevalence(report.plan, labels);

  const auto demo = dataio::FeatureSet::demo();
  const auto full = dataio::FeatureSet::full();
  std::vector<Task> tasks;
  for (std::size_t f = 0; f < settings.families.size(); ++f) {
    for (int fold = 0; fold < settings.folds; ++fold) {
      tasks.push_back({f, fold, false});
      tasks.push_back({f, fold, true});
    }
  }
  std::vector<FoldResult> fold_results(tasks.size());
  std::vector<std::vector<double>> scores(tasks.size());
  std::mutex progress_mutex;
  parallel_for(tasks.size(), [&](std::size_t t) {
    const Task& task = tasks[t];
    const auto family = settings.families[task.family_slot];
    const std::uint64_t fold_seed =
        mix_seed({settings.seed, static_cast<std::uint64_t>(family), static_cast<std::uint64_t>(task.fold)});
    fold_results[t] = run_fold(rows, report.plan, family, task.fold, task.full ? full : demo, reference_date, settings,
                               fold_seed, scores[t]);
    if (progress) {
      std::lock_guard lock(progress_mutex);
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s %s fold %d: auc %.4f f1 %.4f", std::string(models::to_string(family)).c_str(),
                    task.full ? "Full" : "Demo", task.fold, fold_results[t].metrics.auc, fold_results[t].metrics.f1);
      progress(buf);
    }
  });

  for (std::size_t f = 0; f < settings.families.size(); ++f) {
    FamilyResult fr;
    fr.family = settings.families[f];
    fr.demo.variant = "Demo";
    fr.full.variant = "Full";
    OofPredictions oof;
    oof.family = fr.family;
    oof.ids.resize(rows.size());
    oof.labels = labels;
    oof.folds = report.plan.assignments;
    oof.demo_score.assign(rows.size(), 0.0);
    oof.full_score.assign(rows.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i) oof.ids[i] = rows[i].id;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      if (tasks[t].family_slot != f) continue;
      const auto test_idx = report.plan.test_indices(tasks[t].fold);
      auto& target = tasks[t].full ? oof.full_score : oof.demo_score;
      for (std::size_t k = 0; k < test_idx.size(); ++k) target[test_idx[k]] = scores[t][k];
      (tasks[t].full ? fr.full : fr.demo).folds.push_back(std::move(fold_results[t]));
    }
    aggregate(fr.demo, report.plan, labels, oof.demo_score);
    aggregate(fr.full, report.plan, labels, oof.full_score);
    fr.delong = metrics::delong_paired(oof.demo_score, oof.full_score, labels);
    report.results.push_back(std::move(fr));
    report.oof.push_back(std::move(oof));
  }
  return report;
}

}  // namespace ubsb::eval
