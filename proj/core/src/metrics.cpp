#include "ubsb/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ubsb/error.hpp"
#include "ubsb/parallel.hpp"
#include "ubsb/random.hpp"

namespace ubsb::metrics {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw DataError(std::string(what) + ": length mismatch");
}

/// Midranks (1-based) of `x`.
std::vector<double> midranks(std::span<const double> x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = mid;
    i = j + 1;
  }
  return r;
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "roc_auc");
  const auto ranks = midranks(scores);
  double rank_sum = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      rank_sum += ranks[i];
      ++npos;
    }
  }
  const std::size_t nneg = labels.size() - npos;
  if (npos == 0 || nneg == 0) throw DataError("roc_auc: both classes must be present");
  const double m = static_cast<double>(npos), n = static_cast<double>(nneg);
  return (rank_sum - m * (m + 1.0) / 2.0) / (m * n);
}

Confusion confusion(std::span<const int> predictions, std::span<const int> labels) {
  check_lengths(predictions.size(), labels.size(), "confusion");
  Confusion c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i]) {
      (labels[i] ? c.tp : c.fp)++;
    } else {
      (labels[i] ? c.fn : c.tn)++;
    }
  }
  return c;
}

PrecisionRecallF1 precision_recall_f1(std::span<const int> predictions, std::span<const int> labels) {
  PrecisionRecallF1 out;
  out.counts = confusion(predictions, labels);
  const auto& c = out.counts;
  const double tp = static_cast<double>(c.tp);
  if (c.tp + c.fp == 0) {
    out.precision_undefined = true;
    out.precision = 0.0;
  } else {
    out.precision = tp / static_cast<double>(c.tp + c.fp);
  }
  out.recall = c.tp + c.fn == 0 ? 0.0 : tp / static_cast<double>(c.tp + c.fn);
  const std::size_t denom = 2 * c.tp + c.fp + c.fn;
  out.f1 = denom == 0 ? 0.0 : 2.0 * tp / static_cast<double>(denom);
  return out;
}

std::vector<int> apply_threshold(std::span<const double> scores, double threshold) {
  std::vector<int> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] >= threshold ? 1 : 0;
  return out;
}

double select_threshold_max_f1(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "select_threshold_max_f1");
  if (scores.empty()) throw DataError("select_threshold_max_f1: empty input");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::size_t total_pos = 0;
  for (int y : labels) total_pos += y ? 1 : 0;
  const std::size_t n = scores.size();

  // Sweep cuts from lowest (-inf: everything positive) upwards.
  auto f1_of = [&](std::size_t tp, std::size_t predicted) {
    const std::size_t denom = predicted + total_pos;
    return denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  };
  double best_threshold = -std::numeric_limits<double>::infinity();
  double best_f1 = f1_of(total_pos, n);
  std::size_t tp = total_pos;
  std::size_t predicted = n;
  std::size_t i = 0;
  while (i < n) {
    const double v = scores[order[i]];
    std::size_t j = i;
    while (j < n && scores[order[j]] == v) {
      tp -= labels[order[j]] ? 1 : 0;
      --predicted;
      ++j;
    }
    const double cut = j < n ? 0.5 * (v + scores[order[j]]) : std::numeric_limits<double>::infinity();
    const double f1 = f1_of(tp, predicted);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_threshold = cut;
    }
    i = j;
  }
  return best_threshold;
}

nlohmann::json DeLongResult::to_json() const {
  return {{"auc_a", auc_a}, {"auc_b", auc_b}, {"delta", delta},           {"variance", variance},
          {"z", z},         {"p_value", p_value}, {"degenerate", degenerate}};
}

StructuralComponents structural_components(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size(), "structural_components");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(scores[i]);
  if (pos.empty() || neg.empty()) throw DataError("delong: both classes must be present");
  const double m = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());
  const auto tz = midranks(scores);
  const auto tx = midranks(pos);
  const auto ty = midranks(neg);
  StructuralComponents sc;
  sc.v10.reserve(pos.size());
  sc.v01.reserve(neg.size());
  std::size_t ip = 0, in = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i]) {
      sc.v10.push_back((tz[i] - tx[ip++]) / n);
    } else {
      sc.v01.push_back(1.0 - (tz[i] - ty[in++]) / m);
    }
  }
  sc.auc = std::accumulate(sc.v10.begin(), sc.v10.end(), 0.0) / m;
  return sc;
}

namespace {

double covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t k = a.size();
  if (k < 2) return 0.0;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(k);
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(k);
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += (a[i] - ma) * (b[i] - mb);
  return s / static_cast<double>(k - 1);
}

}  // namespace

DeLongResult delong_paired(std::span<const double> scores_a, std::span<const double> scores_b,
                           std::span<const int> labels) {
  check_lengths(scores_a.size(), labels.size(), "delong_paired");
  check_lengths(scores_b.size(), labels.size(), "delong_paired");
  const auto a = structural_components(scores_a, labels);
  const auto b = structural_components(scores_b, labels);
  const double m = static_cast<double>(a.v10.size()), n = static_cast<double>(a.v01.size());
  DeLongResult r;
  r.auc_a = a.auc;
  r.auc_b = b.auc;
  r.delta = b.auc - a.auc;
  const double s10 = covariance(a.v10, a.v10) + covariance(b.v10, b.v10) - 2.0 * covariance(a.v10, b.v10);
  const double s01 = covariance(a.v01, a.v01) + covariance(b.v01, b.v01) - 2.0 * covariance(a.v01, b.v01);
  r.variance = std::max(0.0, s10 / m + s01 / n);
  if (r.variance <= 0.0) {
    r.z = 0.0;
    if (r.delta == 0.0) {
      r.p_value = 1.0;
    } else {
      r.degenerate = true;
      r.z = r.delta > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p_value = 0.0;
    }
    return r;
  }
  r.z = r.delta / std::sqrt(r.variance);
  r.p_value = std::erfc(std::abs(r.z) / std::sqrt(2.0));
  return r;
}

std::vector<std::size_t> stratified_resample(std::span<const int> labels, std::uint64_t seed, std::size_t replicate) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  RandomStream rng = RandomStream::derive(seed, StreamDomain::bootstrap, replicate);
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto* cls : {&pos, &neg}) {
    if (cls->empty()) continue;
    const auto hi = static_cast<std::int64_t>(cls->size()) - 1;
    for (std::size_t k = 0; k < cls->size(); ++k) out.push_back((*cls)[static_cast<std::size_t>(rng.uniform_int(0, hi))]);
  }
  return out;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

BootstrapResult bootstrap_ci(std::span<const int> labels, const IndexStatistic& statistic, int B,
                             std::uint64_t seed) {
  if (B < 1) throw DataError("bootstrap_ci: B must be >= 1");
  BootstrapResult out;
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), 0);
  out.estimate = statistic(all);
  out.replicates.assign(static_cast<std::size_t>(B), 0.0);
  parallel_for(static_cast<std::size_t>(B), [&](std::size_t b) {
    const auto idx = stratified_resample(labels, seed, b);
    out.replicates[b] = statistic(idx);
  });
  out.lo = percentile(out.replicates, 0.025);
  out.hi = percentile(out.replicates, 0.975);
  return out;
}

double log_loss(std::span<const double> probs, std::span<const int> labels, std::span<const double> weights) {
  check_lengths(probs.size(), labels.size(), "log_loss");
  if (!weights.empty()) check_lengths(weights.size(), labels.size(), "log_loss");
  double total = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], 1e-7, 1.0 - 1e-7);
    const double w = weights.empty() ? 1.0 : weights[i];
    total -= w * (labels[i] ? std::log(p) : std::log(1.0 - p));
    wsum += w;
  }
  return wsum > 0.0 ? total / wsum : 0.0;
}

}  // namespace ubsb::metrics
