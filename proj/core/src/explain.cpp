#include "ubsb/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "ubsb/dataio.hpp"
#include "ubsb/error.hpp"
#include "ubsb/parallel.hpp"
#include "ubsb/random.hpp"

namespace ubsb::explain {
namespace {

using Kind = FeatureDomain::Kind;

Kind kind_of(Column c) {
  switch (c) {
    case Column::age:
    case Column::monthly_income:
    case Column::monthly_rent:
    case Column::monthly_subscriptions:
    case Column::online_shopping_frequency:
    case Column::phone_purchase_date:
    case Column::car_purchase_date:
      return Kind::numeric;
    case Column::job:
    case Column::home_district:
    case Column::phone_model:
    case Column::car_brand:
      return Kind::categorical;
    case Column::owns_car:
    case Column::owns_home:
    case Column::owns_credit_card:
    case Column::social_media_active:
      return Kind::boolean;
    default:
      throw std::invalid_argument("column '" + std::string(column_name(c)) + "' cannot be edited");
  }
}

std::string& text_field(Record& r, Column c) {
  switch (c) {
    case Column::job:
      return r.job;
    case Column::home_district:
      return r.home_district;
    case Column::phone_model:
      return r.phone_model;
    case Column::car_brand:
      return r.car_brand;
    default:
      throw std::invalid_argument("not a text column");
  }
}

const std::string& text_field(const Record& r, Column c) { return text_field(const_cast<Record&>(r), c); }

bool& bool_field(Record& r, Column c) {
  switch (c) {
    case Column::owns_car:
      return r.owns_car;
    case Column::owns_home:
      return r.owns_home;
    case Column::owns_credit_card:
      return r.owns_credit_card;
    case Column::social_media_active:
      return r.social_media_active;
    default:
      throw std::invalid_argument("not a boolean column");
  }
}

void set_number(Record& r, Column c, double v, const Date& ref) {
  switch (c) {
    case Column::age:
      r.age = static_cast<int>(std::lround(v));
      break;
    case Column::monthly_income:
      r.monthly_income = v;
      break;
    case Column::monthly_rent:
      r.monthly_rent = v;
      break;
    case Column::monthly_subscriptions:
      r.monthly_subscriptions = v;
      break;
    case Column::online_shopping_frequency:
      r.online_shopping_frequency = static_cast<int>(std::lround(v));
      break;
    case Column::phone_purchase_date:
      r.phone_purchase_date = subtract_months(ref, static_cast<int>(std::lround(std::max(v, 0.0))));
      break;
    case Column::car_purchase_date:
      if (v < 0) {
        r.car_purchase_date.reset();
      } else {
        r.car_purchase_date = subtract_months(ref, static_cast<int>(std::lround(v)));
      }
      break;
    default:
      throw std::invalid_argument("not a numeric column");
  }
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::numeric:
      return "numeric";
    case Kind::categorical:
      return "categorical";
    case Kind::boolean:
      return "boolean";
  }
  return "numeric";
}

Kind parse_kind(const std::string& s) {
  if (s == "numeric") return Kind::numeric;
  if (s == "categorical") return Kind::categorical;
  if (s == "boolean") return Kind::boolean;
  throw DataError("unknown feature domain kind '" + s + "'");
}

/// Mutable-field fingerprint for de-duplication.
std::string key_of(const Record& r, const CfDomains& d) {
  std::string k;
  for (const auto& f : d.features) {
    k += feature_label(r, f.column);
    k += '|';
  }
  return k;
}

}  // namespace

double feature_number(const Record& r, Column c, const Date& ref) {
  switch (c) {
    case Column::age:
      return r.age;
    case Column::monthly_income:
      return r.monthly_income;
    case Column::monthly_rent:
      return r.monthly_rent;
    case Column::monthly_subscriptions:
      return r.monthly_subscriptions;
    case Column::online_shopping_frequency:
      return r.online_shopping_frequency;
    case Column::phone_purchase_date:
      return months_between(r.phone_purchase_date, ref);
    case Column::car_purchase_date:
      return r.car_purchase_date ? months_between(*r.car_purchase_date, ref) : -1.0;
    case Column::owns_car:
    case Column::owns_home:
    case Column::owns_credit_card:
    case Column::social_media_active:
      return bool_field(const_cast<Record&>(r), c) ? 1.0 : 0.0;
    default:
      throw std::invalid_argument("column '" + std::string(column_name(c)) + "' has no numeric value");
  }
}

std::string feature_label(const Record& r, Column c) {
  switch (kind_of(c)) {
    case Kind::categorical:
      return text_field(r, c);
    case Kind::boolean:
      return bool_field(const_cast<Record&>(r), c) ? "true" : "false";
    case Kind::numeric:
      break;
  }
  if (c == Column::phone_purchase_date) return format_date(r.phone_purchase_date);
  if (c == Column::car_purchase_date) return r.car_purchase_date ? format_date(*r.car_purchase_date) : "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", feature_number(r, c, Date{}));
  return buf;
}

Scorer model_scorer(const models::TrainedModel& model) {
  return [&model](std::span<const Record> rows) { return model.predict_proba(rows); };
}

const FeatureDomain* CfDomains::find(Column c) const {
  for (const auto& f : features) {
    if (f.column == c) return &f;
  }
  return nullptr;
}

std::vector<Column> default_mutable_columns() { return dataio::FeatureSet::alternative().columns; }

CfDomains CfDomains::fit(std::span<const Record> train, const Date& reference_date, std::span<const Column> columns) {
  if (train.empty()) throw DataError("counterfactual domains need training rows");
  CfDomains d;
  d.reference_date = reference_date;
  for (Column c : columns) {
    FeatureDomain f;
    f.column = c;
    f.kind = kind_of(c);
    if (f.kind == Kind::categorical) {
      std::set<std::string> values;
      for (const auto& r : train) {
        if (!text_field(r, c).empty()) values.insert(text_field(r, c));
      }
      f.values.assign(values.begin(), values.end());
    } else if (f.kind == Kind::boolean) {
      f.lo = 0.0;
      f.hi = 1.0;
      f.grid = {0.0, 1.0};
    } else {
      std::vector<double> v;
      for (const auto& r : train) {
        if (c == Column::car_purchase_date && !r.car_purchase_date) continue;
        v.push_back(feature_number(r, c, reference_date));
      }
      f.integral = c != Column::monthly_income;
      if (!v.empty()) {
        std::sort(v.begin(), v.end());
        f.lo = v.front();
        f.hi = v.back();
        const double med = median_of(v);
        std::vector<double> dev;
        dev.reserve(v.size());
        double mean_dev = 0.0;
        for (double x : v) {
          dev.push_back(std::abs(x - med));
          mean_dev += std::abs(x - med);
        }
        f.mad = median_of(dev);
        if (!(f.mad > 0.0)) f.mad = mean_dev / static_cast<double>(v.size());
        if (!(f.mad > 0.0)) f.mad = 1.0;
        for (int q = 0; q <= 20; ++q) {
          const auto idx = static_cast<std::size_t>(std::lround(q / 20.0 * static_cast<double>(v.size() - 1)));
          if (f.grid.empty() || v[idx] != f.grid.back()) f.grid.push_back(v[idx]);
        }
      }
    }
    d.features.push_back(std::move(f));
  }
  return d;
}

nlohmann::json CfDomains::to_json() const {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : features) {
    feats.push_back({{"column", column_name(f.column)},
                     {"kind", kind_name(f.kind)},
                     {"lo", f.lo},
                     {"hi", f.hi},
                     {"mad", f.mad},
                     {"integral", f.integral},
                     {"grid", f.grid},
                     {"values", f.values}});
  }
  return {{"reference_date", format_date(reference_date)}, {"features", feats}};
}

CfDomains CfDomains::from_json(const nlohmann::json& j) {
  CfDomains d;
  d.reference_date = parse_date(j.at("reference_date").get<std::string>());
  for (const auto& f : j.at("features")) {
    FeatureDomain fd;
    const auto name = f.at("column").get<std::string>();
    const auto col = column_from_name(name);
    if (!col) throw DataError("unknown column '" + name + "'");
    fd.column = *col;
    fd.kind = parse_kind(f.at("kind").get<std::string>());
    fd.lo = f.at("lo").get<double>();
    fd.hi = f.at("hi").get<double>();
    fd.mad = f.at("mad").get<double>();
    fd.integral = f.at("integral").get<bool>();
    fd.grid = f.at("grid").get<std::vector<double>>();
    fd.values = f.at("values").get<std::vector<std::string>>();
    d.features.push_back(std::move(fd));
  }
  return d;
}

void CfConfig::validate() const {
  if (k < 1) throw std::invalid_argument("counterfactuals: k must be >= 1");
  if (mutable_columns.empty()) throw std::invalid_argument("counterfactuals: no mutable features");
  if (lambda_validity < 0 || lambda_proximity < 0 || lambda_diversity < 0 || lambda_sparsity < 0) {
    throw std::invalid_argument("counterfactuals: loss weights must be >= 0");
  }
  if (population < 2) throw std::invalid_argument("counterfactuals: population must be >= 2");
  if (generations < 0) throw std::invalid_argument("counterfactuals: generations must be >= 0");
  if (desired_class != 0 && desired_class != 1) throw std::invalid_argument("counterfactuals: desired class is 0 or 1");
  std::set<Column> seen;
  for (Column c : mutable_columns) {
    kind_of(c);
    if (!seen.insert(c).second) throw std::invalid_argument("counterfactuals: duplicate mutable feature");
  }
}

nlohmann::json CfConfig::to_json() const {
  nlohmann::json cols = nlohmann::json::array();
  for (Column c : mutable_columns) cols.push_back(column_name(c));
  return {{"k", k},
          {"mutable", cols},
          {"lambda_validity", lambda_validity},
          {"lambda_proximity", lambda_proximity},
          {"lambda_diversity", lambda_diversity},
          {"lambda_sparsity", lambda_sparsity},
          {"population", population},
          {"generations", generations},
          {"desired_class", desired_class},
          {"seed", seed}};
}

double proximity(const Record& a, const Record& b, const CfDomains& domains) {
  double d = 0.0;
  for (const auto& f : domains.features) {
    if (f.kind == Kind::numeric) {
      const double x = feature_number(a, f.column, domains.reference_date);
      const double y = feature_number(b, f.column, domains.reference_date);
      if (f.column == Column::car_purchase_date && ((x < 0) != (y < 0))) {
        d += 1.0;
      } else {
        d += std::abs(x - y) / f.mad;
      }
    } else if (feature_label(a, f.column) != feature_label(b, f.column)) {
      d += 1.0;
    }
  }
  return d;
}

std::vector<std::string> changed_features(const Record& original, const Record& candidate, const CfDomains& domains) {
  std::vector<std::string> out;
  for (const auto& f : domains.features) {
    if (feature_label(original, f.column) != feature_label(candidate, f.column)) {
      out.emplace_back(column_name(f.column));
    }
  }
  return out;
}

void repair(Record& r, const Record& original, const CfDomains& domains) {
  const Date& ref = domains.reference_date;
  for (const auto& f : domains.features) {
    if (f.kind != Kind::numeric) continue;
    if (f.column == Column::car_purchase_date && !r.car_purchase_date) continue;
    const double current = feature_number(r, f.column, ref);
    double v = std::clamp(current, f.lo, f.hi);
    if (f.integral) v = std::round(v);
    if (v != current) set_number(r, f.column, v, ref);
  }
  if (r.owns_home) r.monthly_rent = original.owns_home ? original.monthly_rent : 0.0;
  if (!r.owns_car) {
    r.car_brand.clear();
    r.car_purchase_date.reset();
  } else {
    if (r.car_brand.empty()) {
      if (!original.car_brand.empty()) {
        r.car_brand = original.car_brand;
      } else if (const auto* f = domains.find(Column::car_brand); f && !f->values.empty()) {
        r.car_brand = f->values.front();
      }
    }
    if (!r.car_purchase_date) {
      if (original.car_purchase_date) {
        r.car_purchase_date = original.car_purchase_date;
      } else {
        const auto* f = domains.find(Column::car_purchase_date);
        const double months = f && !f->grid.empty() ? f->grid[f->grid.size() / 2] : 0.0;
        r.car_purchase_date = subtract_months(ref, static_cast<int>(months));
      }
    }
  }
}

nlohmann::json Candidate::to_json() const {
  return {{"record", dataio::format_record(record)},
          {"changed", changed},
          {"probability", probability},
          {"valid", valid},
          {"proximity", proximity}};
}

nlohmann::json CounterfactualSet::to_json() const {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& x : candidates) c.push_back(x.to_json());
  return {{"id", original.id},
          {"original", dataio::format_record(original)},
          {"original_probability", original_probability},
          {"threshold", threshold},
          {"desired_class", desired_class},
          {"trivially_satisfied", trivially_satisfied},
          {"exhausted", exhausted},
          {"candidates", c}};
}

std::string CounterfactualSet::render_text() const {
  std::ostringstream out;
  char buf[200];
  std::snprintf(buf, sizeof buf, "record %lld: p(default) %.4f, threshold %.4f", static_cast<long long>(original.id),
                original_probability, threshold);
  out << buf << '\n';
  if (trivially_satisfied) {
    out << "  already at the desired decision\n";
    return out.str();
  }
  if (candidates.empty()) {
    out << "  no valid counterfactual within the search budget\n";
    return out.str();
  }
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    std::snprintf(buf, sizeof buf, "  #%zu p %.4f%s:", i + 1, c.probability, c.valid ? "" : " (invalid)");
    out << buf;
    for (const auto& name : c.changed) {
      const auto col = column_from_name(name);
      out << ' ' << name << ' ' << feature_label(original, *col) << " -> " << feature_label(c.record, *col) << ';';
    }
    out << '\n';
  }
  return out.str();
}

namespace {

struct Individual {
  Record record;
  double probability = 0.0;
  double fitness = 0.0;
  bool valid = false;
};

bool is_valid(double p, double threshold, int desired) { return desired == 0 ? p < threshold : p >= threshold; }

double hinge(double p, double threshold, int desired) {
  return desired == 0 ? std::max(0.0, p - threshold + 1e-9) : std::max(0.0, threshold - p);
}

void mutate_column(Record& r, const Record& original, const FeatureDomain& f, const Date& ref, RandomStream& rng) {
  if (rng.bernoulli(0.2)) {
    switch (f.kind) {
      case Kind::categorical:
        text_field(r, f.column) = text_field(original, f.column);
        break;
      case Kind::boolean:
        bool_field(r, f.column) = bool_field(const_cast<Record&>(original), f.column);
        break;
      case Kind::numeric:
        set_number(r, f.column, feature_number(original, f.column, ref), ref);
        break;
    }
    return;
  }
  switch (f.kind) {
    case Kind::categorical:
      if (!f.values.empty()) {
        text_field(r, f.column) =
            f.values[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(f.values.size()) - 1))];
      }
      break;
    case Kind::boolean:
      bool_field(r, f.column) = !bool_field(r, f.column);
      break;
    case Kind::numeric: {
      if (f.column == Column::car_purchase_date && !r.car_purchase_date) break;
      double v = rng.bernoulli(0.5) ? rng.uniform(f.lo, f.hi)
                                    : rng.normal(feature_number(r, f.column, ref), f.mad);
      set_number(r, f.column, std::clamp(v, f.lo, f.hi), ref);
      break;
    }
  }
}

}  // namespace

CounterfactualSet generate_counterfactuals(const Scorer& scorer, double threshold, const Record& record,
                                           const CfDomains& all_domains, const CfConfig& config) {
  config.validate();
  CfDomains domains;
  domains.reference_date = all_domains.reference_date;
  for (Column c : config.mutable_columns) {
    const auto* f = all_domains.find(c);
    if (!f) throw std::invalid_argument("no domain for mutable feature '" + std::string(column_name(c)) + "'");
    domains.features.push_back(*f);
  }
  // Homeowner rent is fixed.
  if (record.owns_home && !domains.find(Column::owns_home)) {
    std::erase_if(domains.features, [](const FeatureDomain& f) { return f.column == Column::monthly_rent; });
  }
  std::vector<const FeatureDomain*> genes;
  for (const auto& f : domains.features) genes.push_back(&f);

  CounterfactualSet out;
  out.original = record;
  out.threshold = threshold;
  out.desired_class = config.desired_class;
  out.original_probability = scorer(std::span<const Record>(&record, 1)).at(0);
  if (is_valid(out.original_probability, threshold, config.desired_class)) {
    out.trivially_satisfied = true;
    return out;
  }
  if (genes.empty()) {
    out.exhausted = true;
    return out;
  }

  RandomStream rng = RandomStream::derive(config.seed, StreamDomain::counterfactual, static_cast<std::uint64_t>(record.id));
  const Date& ref = domains.reference_date;
  const auto n_genes = static_cast<std::int64_t>(genes.size());

  struct Archived {
    Record record;
    double probability;
    double fitness;
    double proximity;
  };
  std::vector<Archived> archive;
  std::unordered_map<std::string, std::size_t> seen;

  auto evaluate = [&](std::vector<Individual>& pop) {
    std::vector<Record> rows;
    rows.reserve(pop.size());
    for (const auto& ind : pop) rows.push_back(ind.record);
    const auto probs = scorer(rows);
    for (std::size_t i = 0; i < pop.size(); ++i) {
      auto& ind = pop[i];
      ind.probability = probs[i];
      ind.valid = is_valid(probs[i], threshold, config.desired_class);
      const double prox = proximity(record, ind.record, domains);
      const auto changed = changed_features(record, ind.record, domains).size();
      ind.fitness = config.lambda_validity * hinge(probs[i], threshold, config.desired_class) +
                    config.lambda_proximity * prox + config.lambda_sparsity * static_cast<double>(changed);
      if (ind.valid && changed > 0) {
        auto key = key_of(ind.record, domains);
        if (seen.emplace(std::move(key), archive.size()).second) {
          archive.push_back({ind.record, probs[i], ind.fitness, prox});
        }
      }
    }
  };

  std::vector<Individual> pop(static_cast<std::size_t>(config.population));
  for (auto& ind : pop) {
    ind.record = record;
    const auto m = 1 + rng.uniform_int(0, std::min<std::int64_t>(2, n_genes - 1));
    std::vector<std::size_t> order(genes.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::int64_t i = 0; i < m; ++i) {
      const auto j = static_cast<std::size_t>(rng.uniform_int(i, n_genes - 1));
      std::swap(order[static_cast<std::size_t>(i)], order[j]);
      const auto* f = genes[order[static_cast<std::size_t>(i)]];
      if (f->kind == Kind::categorical || f->kind == Kind::boolean || f->lo < f->hi) {
        // Fresh draws only; reverting to the original is pointless at start.
        switch (f->kind) {
          case Kind::categorical:
            if (!f->values.empty()) {
              text_field(ind.record, f->column) =
                  f->values[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(f->values.size()) - 1))];
            }
            break;
          case Kind::boolean:
            bool_field(ind.record, f->column) = !bool_field(ind.record, f->column);
            break;
          case Kind::numeric:
            if (f->column == Column::car_purchase_date && !ind.record.car_purchase_date) break;
            set_number(ind.record, f->column, rng.uniform(f->lo, f->hi), ref);
            break;
        }
      }
    }
    repair(ind.record, record, domains);
  }
  evaluate(pop);

  auto tournament = [&]() -> const Individual& {
    const auto& a = pop[static_cast<std::size_t>(rng.uniform_int(0, config.population - 1))];
    const auto& b = pop[static_cast<std::size_t>(rng.uniform_int(0, config.population - 1))];
    return b.fitness < a.fitness ? b : a;
  };
  const std::size_t n_elite = std::max<std::size_t>(1, static_cast<std::size_t>(config.population) / 10);
  for (int gen = 0; gen < config.generations; ++gen) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pop[a].fitness < pop[b].fitness; });
    std::vector<Individual> next;
    next.reserve(pop.size());
    for (std::size_t i = 0; i < n_elite; ++i) next.push_back(pop[order[i]]);
    while (next.size() < pop.size()) {
      const Individual& a = tournament();
      const Individual& b = tournament();
      Individual child;
      child.record = a.record;
      for (const auto* f : genes) {
        if (!rng.bernoulli(0.5)) continue;
        switch (f->kind) {
          case Kind::categorical:
            text_field(child.record, f->column) = text_field(b.record, f->column);
            break;
          case Kind::boolean:
            bool_field(child.record, f->column) = bool_field(const_cast<Record&>(b.record), f->column);
            break;
          case Kind::numeric:
            set_number(child.record, f->column, feature_number(b.record, f->column, ref), ref);
            break;
        }
      }
      const double rate = 1.0 / static_cast<double>(genes.size());
      for (const auto* f : genes) {
        if (rng.bernoulli(rate)) mutate_column(child.record, record, *f, ref, rng);
      }
      repair(child.record, record, domains);
      next.push_back(std::move(child));
    }
    pop = std::move(next);
    evaluate(pop);
  }

  if (archive.empty()) {
    out.exhausted = true;
    return out;
  }
  std::vector<std::size_t> ranked(archive.size());
  std::iota(ranked.begin(), ranked.end(), 0);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return archive[a].fitness < archive[b].fitness; });
  std::vector<std::size_t> chosen{ranked.front()};
  while (static_cast<int>(chosen.size()) < config.k) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t pick = archive.size();
    for (auto i : ranked) {
      if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
      double total = 0.0, nearest = std::numeric_limits<double>::infinity();
      for (auto c : chosen) {
        const double d = proximity(archive[i].record, archive[c].record, domains);
        total += d;
        nearest = std::min(nearest, d);
      }
      if (!(nearest > 0.0)) continue;
      const double score = -archive[i].fitness + config.lambda_diversity * total / static_cast<double>(chosen.size());
      if (score > best) {
        best = score;
        pick = i;
      }
    }
    if (pick == archive.size()) break;
    chosen.push_back(pick);
  }
  for (auto i : chosen) {
    Candidate c;
    c.record = archive[i].record;
    c.changed = changed_features(record, c.record, domains);
    c.probability = archive[i].probability;
    c.valid = true;
    c.proximity = archive[i].proximity;
    out.candidates.push_back(std::move(c));
  }
  return out;
}

CounterfactualSet generate_counterfactuals(const models::TrainedModel& model, const Record& record,
                                           const CfDomains& domains, const CfConfig& config) {
  return generate_counterfactuals(model_scorer(model), model.threshold, record, domains, config);
}

nlohmann::json FlipProfile::to_json() const {
  nlohmann::json f = nlohmann::json::object();
  for (const auto& [name, c] : features) f[name] = {{"count", c.count}, {"share", c.share}};
  return {{"candidates", candidates}, {"features", f}};
}

FlipProfile flip_frequency(std::span<const CounterfactualSet> sets, std::span<const Column> columns) {
  FlipProfile p;
  for (Column c : columns) p.features[std::string(column_name(c))] = {};
  for (const auto& s : sets) {
    for (const auto& c : s.candidates) {
      if (!c.valid) continue;
      ++p.candidates;
      for (const auto& name : c.changed) ++p.features[name].count;
    }
  }
  if (p.candidates == 0) throw DataError("flip frequency: no valid counterfactuals");
  for (auto& [name, c] : p.features) c.share = static_cast<double>(c.count) / static_cast<double>(p.candidates);
  return p;
}

nlohmann::json SingleEditResult::to_json() const {
  return {{"eligible", eligible}, {"flippable", flippable}, {"rate", rate}, {"by_feature", by_feature}};
}

SingleEditResult single_edit_flip_rate(const Scorer& scorer, double threshold, std::span<const Record> records,
                                       const CfDomains& domains, std::span<const Column> mutable_columns,
                                       int desired_class) {
  SingleEditResult res;
  for (Column c : mutable_columns) res.by_feature[std::string(column_name(c))] = 0;
  if (records.empty()) return res;
  const auto base = scorer(records);
  const Date& ref = domains.reference_date;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (is_valid(base[r], threshold, desired_class)) continue;
    ++res.eligible;
    const Record& orig = records[r];
    std::vector<Record> variants;
    std::vector<std::string> owner;
    for (Column c : mutable_columns) {
      const auto* f = domains.find(c);
      if (!f) throw std::invalid_argument("no domain for '" + std::string(column_name(c)) + "'");
      if (c == Column::monthly_rent && orig.owns_home) continue;
      if ((c == Column::car_brand || c == Column::car_purchase_date) && !orig.owns_car) continue;
      auto push = [&](Record v) {
        repair(v, orig, domains);
        if (v == orig) return;
        variants.push_back(std::move(v));
        owner.emplace_back(column_name(c));
      };
      switch (f->kind) {
        case Kind::categorical:
          for (const auto& value : f->values) {
            Record v = orig;
            text_field(v, c) = value;
            push(std::move(v));
          }
          break;
        case Kind::boolean: {
          Record v = orig;
          bool_field(v, c) = !bool_field(v, c);
          push(std::move(v));
          break;
        }
        case Kind::numeric:
          for (double g : f->grid) {
            Record v = orig;
            set_number(v, c, g, ref);
            push(std::move(v));
          }
          break;
      }
    }
    if (variants.empty()) continue;
    const auto probs = scorer(variants);
    std::set<std::string> flipped_by;
    for (std::size_t i = 0; i < variants.size(); ++i) {
      if (is_valid(probs[i], threshold, desired_class)) flipped_by.insert(owner[i]);
    }
    if (!flipped_by.empty()) ++res.flippable;
    for (const auto& name : flipped_by) ++res.by_feature[name];
  }
  res.rate = res.eligible ? static_cast<double>(res.flippable) / static_cast<double>(res.eligible) : 0.0;
  return res;
}

}  // namespace ubsb::explain
