#include "ubsb/logreg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ubsb/error.hpp"
#include "ubsb/gbdt.hpp"
#include "ubsb/parallel.hpp"

namespace ubsb::models {
namespace {

/// log(1 + e^m) without overflow.
double softplus(double m) { return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m)); }

std::vector<double> margins(const encode::FeatureMatrix& x, double b0, std::span<const double> coef) {
  std::vector<double> m(x.n_rows);
  parallel_for(x.n_rows, [&](std::size_t i) {
    const double* r = x.row(i);
    double s = b0;
    for (std::size_t j = 0; j < x.n_cols; ++j) s += r[j] * coef[j];
    m[i] = s;
  });
  return m;
}

double penalty(std::span<const double> coef, double lambda, double alpha) {
  double l1 = 0.0, l2 = 0.0;
  for (double b : coef) {
    l1 += std::abs(b);
    l2 += b * b;
  }
  return lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2);
}

double objective_from_margins(std::span<const double> m, std::span<const int> labels, std::span<const double> w,
                              std::span<const double> coef, double lambda, double alpha) {
  double loss = 0.0, W = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    loss += w[i] * (softplus(m[i]) - (labels[i] ? m[i] : 0.0));
    W += w[i];
  }
  return loss / W + penalty(coef, lambda, alpha);
}

std::vector<double> unit_or_balanced(std::span<const int> labels, std::span<const double> weights, bool balanced) {
  if (!weights.empty()) {
    if (weights.size() != labels.size()) throw DataError("logreg: weight count does not match labels");
    return {weights.begin(), weights.end()};
  }
  std::vector<double> w(labels.size(), 1.0);
  if (balanced) {
    const auto cw = class_weights(labels);
    for (std::size_t i = 0; i < labels.size(); ++i) w[i] = labels[i] ? cw.w_pos : cw.w_neg;
  }
  return w;
}

/// Nonzero entries of one column.
struct SparseColumn {
  std::vector<std::uint32_t> rows;
  std::vector<double> values;
};

}  // namespace

void LogregParams::validate() const {
  if (!(alpha_mix >= 0.0 && alpha_mix <= 1.0)) throw std::invalid_argument("logreg: alpha_mix must be in [0, 1]");
  if (!(lambda >= 0.0)) throw std::invalid_argument("logreg: lambda must be >= 0");
  if (!(tol > 0.0)) throw std::invalid_argument("logreg: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("logreg: max_iter must be >= 1");
}

nlohmann::json LogregParams::to_json() const {
  return {{"alpha_mix", alpha_mix}, {"lambda", lambda}, {"tol", tol}, {"max_iter", max_iter}, {"balanced", balanced}};
}

LogregParams LogregParams::from_json(const nlohmann::json& j) {
  LogregParams p;
  p.alpha_mix = j.at("alpha_mix").get<double>();
  p.lambda = j.at("lambda").get<double>();
  p.tol = j.at("tol").get<double>();
  p.max_iter = j.at("max_iter").get<int>();
  p.balanced = j.at("balanced").get<bool>();
  p.validate();
  return p;
}

double logreg_objective(const encode::FeatureMatrix& x, std::span<const int> labels, std::span<const double> weights,
                        double intercept, std::span<const double> coef, double lambda, double alpha_mix) {
  if (coef.size() != x.n_cols || labels.size() != x.n_rows) throw DataError("logreg_objective: shape mismatch");
  const auto w = unit_or_balanced(labels, weights, false);
  const auto m = margins(x, intercept, coef);
  return objective_from_margins(m, labels, w, coef, lambda, alpha_mix);
}

std::vector<double> logreg_gradient(const encode::FeatureMatrix& x, std::span<const int> labels,
                                    std::span<const double> weights, double intercept, std::span<const double> coef,
                                    double lambda, double alpha_mix) {
  if (coef.size() != x.n_cols || labels.size() != x.n_rows) throw DataError("logreg_gradient: shape mismatch");
  const auto w = unit_or_balanced(labels, weights, false);
  const auto m = margins(x, intercept, coef);
  double W = 0.0;
  for (double v : w) W += v;
  std::vector<double> grad(x.n_cols + 1, 0.0);
  for (std::size_t i = 0; i < x.n_rows; ++i) {
    const double r = w[i] * (sigmoid(m[i]) - (labels[i] ? 1.0 : 0.0)) / W;
    grad[0] += r;
    const double* row = x.row(i);
    for (std::size_t j = 0; j < x.n_cols; ++j) grad[j + 1] += r * row[j];
  }
  for (std::size_t j = 0; j < x.n_cols; ++j) {
    const double b = coef[j];
    const double sign = b > 0 ? 1.0 : (b < 0 ? -1.0 : 0.0);
    grad[j + 1] += lambda * (alpha_mix * sign + (1.0 - alpha_mix) * b);
  }
  return grad;
}

double LogregModel::margin(const double* row) const {
  double s = intercept;
  for (std::size_t j = 0; j < coef.size(); ++j) s += row[j] * coef[j];
  return s;
}

std::vector<double> LogregModel::predict_proba(const encode::FeatureMatrix& x) const {
  if (x.n_cols != coef.size()) throw DataError("logreg: matrix has " + std::to_string(x.n_cols) +
                                               " columns, model expects " + std::to_string(coef.size()));
  std::vector<double> out(x.n_rows);
  parallel_for(x.n_rows, [&](std::size_t i) { out[i] = clamp_prob(sigmoid(margin(x.row(i)))); });
  return out;
}

nlohmann::json LogregModel::to_json() const {
  return {{"params", params.to_json()}, {"intercept", intercept},   {"coef", coef},
          {"converged", converged},     {"iterations", iterations}, {"objective_trace", objective_trace}};
}

LogregModel LogregModel::from_json(const nlohmann::json& j) {
  LogregModel m;
  m.params = LogregParams::from_json(j.at("params"));
  m.intercept = j.at("intercept").get<double>();
  m.coef = j.at("coef").get<std::vector<double>>();
  m.converged = j.at("converged").get<bool>();
  m.iterations = j.at("iterations").get<int>();
  m.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  return m;
}

LogregModel fit_logreg(const encode::FeatureMatrix& x, std::span<const int> labels, std::span<const double> weights_in,
                       const LogregParams& params) {
  params.validate();
  if (labels.size() != x.n_rows) throw DataError("fit_logreg: label count does not match rows");
  const auto pos = std::count_if(labels.begin(), labels.end(), [](int y) { return y != 0; });
  if (pos == 0 || static_cast<std::size_t>(pos) == labels.size()) {
    throw DataError("fit_logreg: both classes must be present");
  }
  const auto w = unit_or_balanced(labels, weights_in, params.balanced);
  const std::size_t n = x.n_rows, d = x.n_cols;
  double W = 0.0, Wp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    W += w[i];
    if (labels[i]) Wp += w[i];
  }

  std::vector<SparseColumn> cols(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      if (r[j] != 0.0) {
        cols[j].rows.push_back(static_cast<std::uint32_t>(i));
        cols[j].values.push_back(r[j]);
      }
    }
  }

  const double lambda = params.lambda, alpha = params.alpha_mix;
  LogregModel model;
  model.params = params;
  model.coef.assign(d, 0.0);
  model.intercept = std::log(Wp / (W - Wp));
  std::vector<double> m = margins(x, model.intercept, model.coef);
  double f = objective_from_margins(m, labels, w, model.coef, lambda, alpha);
  model.objective_trace.push_back(f);

  std::vector<double> g(n), v(n), q(n);
  std::vector<double> beta_new(d);
  for (int iter = 0; iter < params.max_iter; ++iter) {
    model.iterations = iter + 1;
    double vsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = sigmoid(m[i]);
      g[i] = w[i] * (p - (labels[i] ? 1.0 : 0.0)) / W;
      v[i] = w[i] * std::max(p * (1.0 - p), 1e-12) / W;
      vsum += v[i];
    }
    std::vector<double> vjj(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < cols[j].rows.size(); ++k) vjj[j] += v[cols[j].rows[k]] * cols[j].values[k] * cols[j].values[k];
    }

    // Coordinate descent on the quadratic model; q = X delta (with intercept).
    std::fill(q.begin(), q.end(), 0.0);
    beta_new = model.coef;
    double delta0 = 0.0;
    for (int sweep = 0; sweep < 200; ++sweep) {
      double max_change = 0.0;
      {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += g[i] + v[i] * q[i];
        const double step = -s / vsum;
        delta0 += step;
        for (std::size_t i = 0; i < n; ++i) q[i] += step;
        max_change = std::max(max_change, std::abs(step));
      }
      for (std::size_t j = 0; j < d; ++j) {
        const auto& c = cols[j];
        if (c.rows.empty()) continue;
        double s = 0.0;
        for (std::size_t k = 0; k < c.rows.size(); ++k) {
          const auto i = c.rows[k];
          s += c.values[k] * (g[i] + v[i] * q[i]);
        }
        const double old = beta_new[j];
        const double z = vjj[j] * old - s;
        const double updated = soft_threshold(z, lambda * alpha) / (vjj[j] + lambda * (1.0 - alpha) + 1e-300);
        const double diff = updated - old;
        if (diff == 0.0) continue;
        beta_new[j] = updated;
        for (std::size_t k = 0; k < c.rows.size(); ++k) q[c.rows[k]] += c.values[k] * diff;
        max_change = std::max(max_change, std::abs(diff));
      }
      if (max_change < 0.1 * params.tol) break;
    }

    // Backtracking along the proximal Newton direction.
    std::vector<double> dir(d);
    double max_dir = std::abs(delta0);
    for (std::size_t j = 0; j < d; ++j) {
      dir[j] = beta_new[j] - model.coef[j];
      max_dir = std::max(max_dir, std::abs(dir[j]));
    }
    double t = 1.0;
    bool accepted = false;
    std::vector<double> trial(d), trial_m(n);
    double trial_f = f;
    for (int ls = 0; ls < 40; ++ls) {
      for (std::size_t j = 0; j < d; ++j) trial[j] = model.coef[j] + t * dir[j];
      for (std::size_t i = 0; i < n; ++i) trial_m[i] = m[i] + t * q[i];
      trial_f = objective_from_margins(trial_m, labels, w, trial, lambda, alpha);
      if (trial_f <= f) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      model.converged = max_dir < params.tol;
      break;
    }
    model.coef = trial;
    model.intercept += t * delta0;
    m.swap(trial_m);
    f = trial_f;
    model.objective_trace.push_back(f);
    if (t * max_dir < params.tol) {
      model.converged = true;
      break;
    }
  }
  return model;
}

}  // namespace ubsb::models
