#include "ubsb/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "ubsb/error.hpp"

namespace ubsb::synthgen {

double ProbabilityCurve::at(double x) const noexcept {
  if (points.empty()) return 0.0;
  if (x <= points.front().first) return points.front().second;
  if (x >= points.back().first) return points.back().second;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const auto& [x1, y1] = points[i];
    if (x <= x1) {
      const auto& [x0, y0] = points[i - 1];
      const double t = (x - x0) / (x1 - x0);
      return y0 + t * (y1 - y0);
    }
  }
  return points.back().second;
}

namespace {

void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path + ": " + message, path);
}

void check_probability(double p, const std::string& path) {
  require(p >= 0.0 && p <= 1.0, path, "probability must lie in [0, 1]");
}

void check_mean_cv(const MeanCv& d, const std::string& path) {
  require(d.mean >= 0.0 && std::isfinite(d.mean), path, "mean must be finite and >= 0");
  require(d.cv >= 0.0 && std::isfinite(d.cv), path, "cv must be finite and >= 0");
}

void check_name(const std::string& name, const std::string& path) {
  require(!name.empty(), path, "name must not be empty");
  require(name.find_first_of(",\"\n\r") == std::string::npos, path,
          "names must not contain commas, quotes or newlines");
}

}  // namespace

void MarginalConfig::validate() const {
  require(min_wage > 0.0, "min_wage", "must be positive");
  require(target_prevalence > 0.0 && target_prevalence <= 0.5, "target_prevalence",
          "must lie in (0, 0.5]");
  check_probability(education_upgrade_prob, "education_upgrade_prob");
  require(reference_date.ok(), "reference_date", "invalid date");
  require(calibration_sample >= 1000, "calibration_sample", "must be at least 1000");
  require(district_rank_jitter >= 0, "district_rank_jitter", "must be >= 0");
  require(rent_jitter >= 0.0 && rent_jitter < 1.0, "rent_jitter", "must lie in [0, 1)");
  for (double a : dwelling_area_m2) require(a > 0.0, "dwelling_area_m2", "areas must be positive");

  require(!age_bands.empty(), "age_bands", "at least one age band required");
  double age_weight = 0.0;
  for (std::size_t i = 0; i < age_bands.size(); ++i) {
    const auto& b = age_bands[i];
    const std::string path = "age_bands[" + std::to_string(i) + "]";
    require(b.min_age >= 18 && b.max_age <= 75 && b.min_age <= b.max_age, path,
            "ages must satisfy 18 <= min <= max <= 75");
    require(b.weight >= 0.0, path, "weight must be >= 0");
    age_weight += b.weight;
  }
  require(age_weight > 0.0, "age_bands", "at least one weight must be positive");

  require(!occupations.empty(), "occupations", "at least one occupation required");
  double occ_weight = 0.0;
  std::set<std::string> titles;
  for (std::size_t i = 0; i < occupations.size(); ++i) {
    const auto& o = occupations[i];
    const std::string path = "occupations[" + std::to_string(i) + "]";
    check_name(o.title, path);
    require(titles.insert(o.title).second, path, "duplicate occupation title '" + o.title + "'");
    require(o.weight >= 0.0, path, "weight must be >= 0");
    occ_weight += o.weight;
    require(o.income.min <= o.income.max, path, "income band requires min <= max");
    require(o.income.min >= 0.5 * min_wage, path, "income band minimum must be >= 0.5 * min_wage");
    double status_total = 0.0;
    for (double w : o.status_weights) {
      require(w >= 0.0, path, "status weights must be >= 0");
      status_total += w;
    }
    require(status_total > 0.0, path, "at least one status weight must be positive");
  }
  require(occ_weight > 0.0, "occupations", "at least one weight must be positive");

  require(!device_tiers.empty(), "device_tiers", "at least one device tier required");
  bool found_flagship = false;
  for (std::size_t i = 0; i < device_tiers.size(); ++i) {
    const auto& t = device_tiers[i];
    const std::string path = "device_tiers[" + std::to_string(i) + "]";
    check_name(t.name, path);
    require(!t.models.empty(), path, "model pool must not be empty");
    for (const auto& m : t.models) check_name(m, path + ".models");
    require(t.income.min <= t.income.max || i + 1 == device_tiers.size(), path,
            "income band requires min <= max");
    check_mean_cv(t.age_months, path + ".age_months");
    found_flagship |= t.name == flagship_tier;
  }
  require(found_flagship, "flagship_tier", "no device tier named '" + flagship_tier + "'");
  // Tiers must cover every income from 0 upward.
  {
    std::vector<IncomeBand> bands;
    for (std::size_t i = 0; i < device_tiers.size(); ++i) {
      IncomeBand b = device_tiers[i].income;
      if (i + 1 == device_tiers.size()) b.max = std::numeric_limits<double>::infinity();
      bands.push_back(b);
    }
    std::sort(bands.begin(), bands.end(), [](auto& a, auto& b) { return a.min < b.min; });
    double covered = 0.0;
    require(bands.front().min <= 0.0, "device_tiers", "tiers must cover income 0");
    for (const auto& b : bands) {
      require(b.min <= covered + 1.0, "device_tiers", "gap in device tier income coverage");
      covered = std::max(covered, b.max);
    }
    require(std::isinf(covered), "device_tiers", "last device tier must be open-ended");
  }

  for (std::size_t i = 0; i < car_rules.size(); ++i) {
    const auto& r = car_rules[i];
    const std::string path = "car_rules[" + std::to_string(i) + "]";
    check_probability(r.ownership_prob, path + ".ownership_prob");
    require(r.ownership_prob == 0.0 || !r.brands.empty(), path, "brand pool must not be empty");
    for (const auto& b : r.brands) check_name(b, path + ".brands");
    check_mean_cv(r.age_months, path + ".age_months");
    require(i == 0 || r.income_threshold > car_rules[i - 1].income_threshold, path,
            "income thresholds must be strictly increasing");
  }

  require(!districts.empty(), "districts", "at least one district required");
  {
    std::vector<int> ranks;
    std::set<std::string> names;
    for (std::size_t i = 0; i < districts.size(); ++i) {
      const auto& d = districts[i];
      const std::string path = "districts[" + std::to_string(i) + "]";
      check_name(d.name, path);
      require(names.insert(d.name).second, path, "duplicate district '" + d.name + "'");
      require(d.rent_per_m2 >= 0.0, path, "rent_per_m2 must be >= 0");
      ranks.push_back(d.income_rank);
    }
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
      require(ranks[i] == static_cast<int>(i) + 1, "districts",
              "income ranks must be a permutation of 1..D");
    }
  }

  require(!home_ownership_prob_by_income.points.empty(), "home_ownership",
          "at least one point required");
  for (std::size_t i = 0; i < home_ownership_prob_by_income.points.size(); ++i) {
    const auto& [x, p] = home_ownership_prob_by_income.points[i];
    check_probability(p, "home_ownership");
    require(i == 0 || x > home_ownership_prob_by_income.points[i - 1].first, "home_ownership",
            "income knots must be strictly increasing");
  }

  require(!behavior_bands.empty(), "behavior_bands", "at least one behavior band required");
  for (std::size_t i = 0; i < behavior_bands.size(); ++i) {
    const auto& b = behavior_bands[i];
    const std::string path = "behavior_bands[" + std::to_string(i) + "]";
    check_mean_cv(b.subscriptions, path + ".subscriptions");
    check_mean_cv(b.shopping, path + ".shopping");
    check_probability(b.social_media_prob, path + ".social_media_prob");
    check_probability(b.credit_card_prob, path + ".credit_card_prob");
    require(i == 0 || b.income_max > behavior_bands[i - 1].income_max, path,
            "income_max must be strictly increasing");
  }

  const auto& lr = label_rules;
  require(lr.noise_flip_prob >= 0.0 && lr.noise_flip_prob <= 0.1, "label_rules.noise_flip_prob",
          "must lie in [0, 0.1]");
  require(lr.calibrated_threshold >= 0, "label_rules.calibrated_threshold", "must be >= 0");
  for (int p : {lr.employment.unemployed_points, lr.employment.self_employed_points,
                lr.device_churn.points, lr.rent_burden.points, lr.rent_burden.severe_points,
                lr.shopping_volatility.points, lr.subscription_burden.points, lr.thin_assets.points,
                lr.young_self_employed.points}) {
    require(p >= 0, "label_rules", "risk points must be non-negative");
  }
  require(lr.rent_burden.severe_ratio >= lr.rent_burden.ratio, "label_rules.rent_burden",
          "severe_ratio must be >= ratio");
}

std::size_t MarginalConfig::flagship_index() const {
  for (std::size_t i = 0; i < device_tiers.size(); ++i) {
    if (device_tiers[i].name == flagship_tier) return i;
  }
  throw ConfigError("no device tier named '" + flagship_tier + "'", "flagship_tier");
}

std::size_t MarginalConfig::occupation_index(std::string_view title) const {
  for (std::size_t i = 0; i < occupations.size(); ++i) {
    if (occupations[i].title == title) return i;
  }
  throw ConfigError("unknown job '" + std::string(title) + "'", "occupations");
}

double MarginalConfig::income_percentile(double income) const {
  double total = 0.0, acc = 0.0;
  for (const auto& o : occupations) {
    total += o.weight;
    double f;
    if (income >= o.income.max) {
      f = 1.0;
    } else if (income < o.income.min) {
      f = 0.0;
    } else {
      f = (income - o.income.min) / (o.income.max - o.income.min);
    }
    acc += o.weight * f;
  }
  return total > 0.0 ? acc / total : 0.0;
}

double MarginalConfig::median_income() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& o : occupations) {
    if (o.weight <= 0.0) continue;
    lo = std::min(lo, o.income.min);
    hi = std::max(hi, o.income.max);
  }
  for (int it = 0; it < 200 && hi - lo > 1e-6; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (income_percentile(mid) < 0.5) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// TOML loading

namespace {

class Reader {
 public:
  Reader(std::string_view source) : source_(source) {}

  [[noreturn]] void fail(const toml::node* node, const std::string& message) const {
    std::ostringstream os;
    os << source_;
    if (node != nullptr) os << ":" << node->source().begin.line;
    os << ": " << message;
    throw ConfigError(os.str());
  }

  const toml::node* get(const toml::table& t, std::string_view key, bool required,
                        const std::string& context) const {
    const toml::node* n = t.get(key);
    if (n == nullptr && required) fail(&t, context + "missing key '" + std::string(key) + "'");
    return n;
  }

  double number(const toml::table& t, std::string_view key, const std::string& ctx,
                std::optional<double> fallback = std::nullopt) const {
    const toml::node* n = get(t, key, !fallback.has_value(), ctx);
    if (n == nullptr) return *fallback;
    if (auto v = n->value<double>()) return *v;
    fail(n, ctx + "'" + std::string(key) + "' must be a number");
  }

  int integer(const toml::table& t, std::string_view key, const std::string& ctx,
              std::optional<int> fallback = std::nullopt) const {
    const toml::node* n = get(t, key, !fallback.has_value(), ctx);
    if (n == nullptr) return *fallback;
    if (n->is_integer()) return static_cast<int>(*n->value<std::int64_t>());
    fail(n, ctx + "'" + std::string(key) + "' must be an integer");
  }

  bool boolean(const toml::table& t, std::string_view key, const std::string& ctx,
               std::optional<bool> fallback = std::nullopt) const {
    const toml::node* n = get(t, key, !fallback.has_value(), ctx);
    if (n == nullptr) return *fallback;
    if (auto v = n->value<bool>()) return *v;
    fail(n, ctx + "'" + std::string(key) + "' must be a boolean");
  }

  std::string string(const toml::table& t, std::string_view key, const std::string& ctx,
                     std::optional<std::string> fallback = std::nullopt) const {
    const toml::node* n = get(t, key, !fallback.has_value(), ctx);
    if (n == nullptr) return *fallback;
    if (auto v = n->value<std::string>()) return *v;
    fail(n, ctx + "'" + std::string(key) + "' must be a string");
  }

  std::vector<std::string> strings(const toml::table& t, std::string_view key,
                                   const std::string& ctx) const {
    const toml::node* n = get(t, key, true, ctx);
    const toml::array* arr = n->as_array();
    if (arr == nullptr) fail(n, ctx + "'" + std::string(key) + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *arr) {
      auto v = e.value<std::string>();
      if (!v) fail(&e, ctx + "'" + std::string(key) + "' must contain only strings");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<double> numbers(const toml::table& t, std::string_view key, const std::string& ctx) const {
    const toml::node* n = get(t, key, true, ctx);
    const toml::array* arr = n->as_array();
    if (arr == nullptr) fail(n, ctx + "'" + std::string(key) + "' must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : *arr) {
      auto v = e.value<double>();
      if (!v) fail(&e, ctx + "'" + std::string(key) + "' must contain only numbers");
      out.push_back(*v);
    }
    return out;
  }

  IncomeBand band(const toml::table& t, std::string_view key, const std::string& ctx) const {
    const toml::node* n = get(t, key, true, ctx);
    auto v = numbers(t, key, ctx);
    if (v.size() != 2) fail(n, ctx + "'" + std::string(key) + "' must be [min, max]");
    return {v[0], v[1]};
  }

  const toml::table& table(const toml::table& t, std::string_view key, const std::string& ctx) const {
    const toml::node* n = get(t, key, true, ctx);
    const toml::table* tbl = n->as_table();
    if (tbl == nullptr) fail(n, ctx + "'" + std::string(key) + "' must be a table");
    return *tbl;
  }

  MeanCv mean_cv(const toml::table& t, std::string_view key, const std::string& ctx) const {
    const auto& tbl = table(t, key, ctx);
    const std::string sub = ctx + std::string(key) + ".";
    return {number(tbl, "mean", sub), number(tbl, "cv", sub, 0.0)};
  }

  template <typename Fn>
  void each_table(const toml::table& t, std::string_view key, const std::string& path, Fn&& fn) {
    const toml::node* n = get(t, key, true, "");
    const toml::array* arr = n->as_array();
    if (arr == nullptr) fail(n, "'" + std::string(key) + "' must be an array of tables");
    lines_[std::string(key)] = n->source().begin.line;
    std::size_t i = 0;
    for (const auto& e : *arr) {
      const toml::table* tbl = e.as_table();
      if (tbl == nullptr) fail(&e, "'" + std::string(key) + "' must contain tables");
      const std::string item = path + "[" + std::to_string(i) + "]";
      lines_[item] = tbl->source().begin.line;
      fn(*tbl, item + ": ");
      ++i;
    }
  }

  void remember(std::string key, const toml::node* n) {
    if (n != nullptr) lines_[std::move(key)] = n->source().begin.line;
  }

  /// Best line for a ConfigError path: the longest remembered prefix.
  std::optional<std::uint32_t> line_for(const std::string& path) const {
    std::string p = path;
    while (!p.empty()) {
      if (auto it = lines_.find(p); it != lines_.end()) return it->second;
      const auto cut = p.find_last_of(".[");
      if (cut == std::string::npos) break;
      p.resize(cut);
    }
    return std::nullopt;
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, std::uint32_t> lines_;
};

Education education_from(const Reader& rd, const toml::table& t, const std::string& ctx) {
  const std::string s = rd.string(t, "min_education", ctx);
  try {
    return parse_education(s);
  } catch (const DataError& e) {
    rd.fail(t.get("min_education"), ctx + e.what());
  }
}

}  // namespace

MarginalConfig parse_config(std::string_view toml_text, std::string_view source_name) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source_name << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(os.str());
  }

  Reader rd(source_name);
  MarginalConfig c;

  if (const toml::node* n = root.get("reference_date")) {
    const auto* d = n->as_date();
    if (d == nullptr) rd.fail(n, "'reference_date' must be a TOML date (YYYY-MM-DD)");
    c.reference_date = Date{std::chrono::year{d->get().year}, std::chrono::month{d->get().month},
                            std::chrono::day{d->get().day}};
    rd.remember("reference_date", n);
  } else {
    rd.fail(&root, "missing key 'reference_date'");
  }
  for (const char* key : {"min_wage", "target_prevalence", "education_upgrade_prob", "calibration_sample",
                          "district_rank_jitter", "rent_jitter", "flagship_tier", "dwelling_area_m2"}) {
    rd.remember(key, root.get(key));
  }
  c.min_wage = rd.number(root, "min_wage", "");
  c.target_prevalence = rd.number(root, "target_prevalence", "");
  c.education_upgrade_prob = rd.number(root, "education_upgrade_prob", "");
  c.calibration_sample = rd.integer(root, "calibration_sample", "", 20000);
  c.district_rank_jitter = rd.integer(root, "district_rank_jitter", "", 2);
  c.rent_jitter = rd.number(root, "rent_jitter", "", 0.1);
  c.flagship_tier = rd.string(root, "flagship_tier", "", std::string("flagship"));
  if (root.get("dwelling_area_m2") != nullptr) {
    const auto areas = rd.numbers(root, "dwelling_area_m2", "");
    if (areas.size() != 5) rd.fail(root.get("dwelling_area_m2"), "'dwelling_area_m2' must have 5 entries");
    std::copy(areas.begin(), areas.end(), c.dwelling_area_m2.begin());
  }

  rd.each_table(root, "age_bands", "age_bands", [&](const toml::table& t, const std::string& ctx) {
    c.age_bands.push_back({rd.integer(t, "min", ctx), rd.integer(t, "max", ctx), rd.number(t, "weight", ctx)});
  });

  rd.each_table(root, "occupations", "occupations", [&](const toml::table& t, const std::string& ctx) {
    OccupationSpec o;
    o.title = rd.string(t, "title", ctx);
    o.weight = rd.number(t, "weight", ctx);
    o.income = rd.band(t, "income", ctx);
    o.min_education = education_from(rd, t, ctx);
    const auto& sw = rd.table(t, "status_weights", ctx);
    o.status_weights = {rd.number(sw, "employed", ctx, 0.0), rd.number(sw, "unemployed", ctx, 0.0),
                        rd.number(sw, "self_employed", ctx, 0.0)};
    c.occupations.push_back(std::move(o));
  });

  rd.each_table(root, "device_tiers", "device_tiers", [&](const toml::table& t, const std::string& ctx) {
    DeviceTier d;
    d.name = rd.string(t, "name", ctx);
    d.income = rd.band(t, "income", ctx);
    d.models = rd.strings(t, "models", ctx);
    d.age_months = rd.mean_cv(t, "age_months", ctx);
    c.device_tiers.push_back(std::move(d));
  });

  rd.each_table(root, "car_rules", "car_rules", [&](const toml::table& t, const std::string& ctx) {
    CarRule r;
    r.income_threshold = rd.number(t, "income_threshold", ctx);
    r.ownership_prob = rd.number(t, "ownership_prob", ctx);
    r.tier = rd.string(t, "tier", ctx);
    r.luxury = rd.boolean(t, "luxury", ctx, false);
    r.brands = rd.strings(t, "brands", ctx);
    r.age_months = rd.mean_cv(t, "age_months", ctx);
    c.car_rules.push_back(std::move(r));
  });

  rd.each_table(root, "districts", "districts", [&](const toml::table& t, const std::string& ctx) {
    c.districts.push_back({rd.string(t, "name", ctx), rd.number(t, "rent_per_m2", ctx),
                           rd.integer(t, "income_rank", ctx)});
  });

  {
    const auto& ho = rd.table(root, "home_ownership", "");
    rd.remember("home_ownership", root.get("home_ownership"));
    const auto xs = rd.numbers(ho, "income", "home_ownership.");
    const auto ps = rd.numbers(ho, "prob", "home_ownership.");
    if (xs.size() != ps.size()) rd.fail(&ho, "home_ownership: 'income' and 'prob' lengths differ");
    for (std::size_t i = 0; i < xs.size(); ++i) c.home_ownership_prob_by_income.points.emplace_back(xs[i], ps[i]);
  }

  rd.each_table(root, "behavior_bands", "behavior_bands", [&](const toml::table& t, const std::string& ctx) {
    BehaviorBand b;
    b.income_max = rd.number(t, "income_max", ctx);
    b.subscriptions = rd.mean_cv(t, "subscriptions", ctx);
    b.shopping = rd.mean_cv(t, "shopping", ctx);
    b.social_media_prob = rd.number(t, "social_media_prob", ctx);
    b.credit_card_prob = rd.number(t, "credit_card_prob", ctx);
    c.behavior_bands.push_back(b);
  });

  {
    const auto& lr = rd.table(root, "label_rules", "");
    rd.remember("label_rules", root.get("label_rules"));
    auto& r = c.label_rules;
    r.noise_flip_prob = rd.number(lr, "noise_flip_prob", "label_rules.");
    r.calibrated_threshold = rd.integer(lr, "calibrated_threshold", "label_rules.", 0);
    const auto& emp = rd.table(lr, "employment", "label_rules.");
    r.employment = {rd.integer(emp, "unemployed_points", "label_rules.employment."),
                    rd.integer(emp, "self_employed_points", "label_rules.employment.")};
    const auto& dev = rd.table(lr, "device_churn", "label_rules.");
    r.device_churn = {rd.integer(dev, "max_phone_age_months", "label_rules.device_churn."),
                      rd.integer(dev, "points", "label_rules.device_churn.")};
    const auto& rent = rd.table(lr, "rent_burden", "label_rules.");
    r.rent_burden = {rd.number(rent, "ratio", "label_rules.rent_burden."),
                     rd.integer(rent, "points", "label_rules.rent_burden."),
                     rd.number(rent, "severe_ratio", "label_rules.rent_burden."),
                     rd.integer(rent, "severe_points", "label_rules.rent_burden.")};
    const auto& shop = rd.table(lr, "shopping_volatility", "label_rules.");
    r.shopping_volatility = {rd.integer(shop, "frequency_threshold", "label_rules.shopping_volatility."),
                             rd.integer(shop, "points", "label_rules.shopping_volatility.")};
    const auto& subs = rd.table(lr, "subscription_burden", "label_rules.");
    r.subscription_burden = {rd.number(subs, "ratio", "label_rules.subscription_burden."),
                             rd.integer(subs, "points", "label_rules.subscription_burden.")};
    const auto& thin = rd.table(lr, "thin_assets", "label_rules.");
    r.thin_assets = {rd.integer(thin, "points", "label_rules.thin_assets.")};
    const auto& young = rd.table(lr, "young_self_employed", "label_rules.");
    r.young_self_employed = {rd.integer(young, "max_age", "label_rules.young_self_employed."),
                             rd.integer(young, "points", "label_rules.young_self_employed.")};
  }

  try {
    c.validate();
  } catch (const ConfigError& e) {
    std::ostringstream os;
    os << source_name;
    if (auto line = rd.line_for(e.path())) os << ":" << *line;
    os << ": " << e.what();
    throw ConfigError(os.str(), e.path());
  }
  return c;
}

MarginalConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  std::string s = os.str();
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string string_array(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + quoted(v[i]);
  return out + "]";
}

std::string mean_cv(const MeanCv& d) { return "{ mean = " + num(d.mean) + ", cv = " + num(d.cv) + " }"; }

}  // namespace

std::string to_toml(const MarginalConfig& c) {
  std::ostringstream os;
  os << "reference_date = " << format_date(c.reference_date) << "\n";
  os << "min_wage = " << num(c.min_wage) << "\n";
  os << "target_prevalence = " << num(c.target_prevalence) << "\n";
  os << "education_upgrade_prob = " << num(c.education_upgrade_prob) << "\n";
  os << "calibration_sample = " << c.calibration_sample << "\n";
  os << "district_rank_jitter = " << c.district_rank_jitter << "\n";
  os << "rent_jitter = " << num(c.rent_jitter) << "\n";
  os << "flagship_tier = " << quoted(c.flagship_tier) << "\n";
  os << "dwelling_area_m2 = [";
  for (std::size_t i = 0; i < c.dwelling_area_m2.size(); ++i) os << (i ? ", " : "") << num(c.dwelling_area_m2[i]);
  os << "]\n\n";

  os << "[home_ownership]\nincome = [";
  for (std::size_t i = 0; i < c.home_ownership_prob_by_income.points.size(); ++i)
    os << (i ? ", " : "") << num(c.home_ownership_prob_by_income.points[i].first);
  os << "]\nprob = [";
  for (std::size_t i = 0; i < c.home_ownership_prob_by_income.points.size(); ++i)
    os << (i ? ", " : "") << num(c.home_ownership_prob_by_income.points[i].second);
  os << "]\n\n";

  const auto& r = c.label_rules;
  os << "[label_rules]\nnoise_flip_prob = " << num(r.noise_flip_prob)
     << "\ncalibrated_threshold = " << r.calibrated_threshold << "\n";
  os << "employment = { unemployed_points = " << r.employment.unemployed_points
     << ", self_employed_points = " << r.employment.self_employed_points << " }\n";
  os << "device_churn = { max_phone_age_months = " << r.device_churn.max_phone_age_months
     << ", points = " << r.device_churn.points << " }\n";
  os << "rent_burden = { ratio = " << num(r.rent_burden.ratio) << ", points = " << r.rent_burden.points
     << ", severe_ratio = " << num(r.rent_burden.severe_ratio)
     << ", severe_points = " << r.rent_burden.severe_points << " }\n";
  os << "shopping_volatility = { frequency_threshold = " << r.shopping_volatility.frequency_threshold
     << ", points = " << r.shopping_volatility.points << " }\n";
  os << "subscription_burden = { ratio = " << num(r.subscription_burden.ratio)
     << ", points = " << r.subscription_burden.points << " }\n";
  os << "thin_assets = { points = " << r.thin_assets.points << " }\n";
  os << "young_self_employed = { max_age = " << r.young_self_employed.max_age
     << ", points = " << r.young_self_employed.points << " }\n\n";

  for (const auto& b : c.age_bands) {
    os << "[[age_bands]]\nmin = " << b.min_age << "\nmax = " << b.max_age << "\nweight = " << num(b.weight) << "\n\n";
  }
  for (const auto& o : c.occupations) {
    os << "[[occupations]]\ntitle = " << quoted(o.title) << "\nweight = " << num(o.weight) << "\nincome = ["
       << num(o.income.min) << ", " << num(o.income.max) << "]\nmin_education = "
       << quoted(std::string(to_string(o.min_education))) << "\nstatus_weights = { employed = "
       << num(o.status_weights[0]) << ", unemployed = " << num(o.status_weights[1])
       << ", self_employed = " << num(o.status_weights[2]) << " }\n\n";
  }
  for (const auto& t : c.device_tiers) {
    os << "[[device_tiers]]\nname = " << quoted(t.name) << "\nincome = [" << num(t.income.min) << ", "
       << num(t.income.max) << "]\nmodels = " << string_array(t.models) << "\nage_months = " << mean_cv(t.age_months)
       << "\n\n";
  }
  for (const auto& cr : c.car_rules) {
    os << "[[car_rules]]\nincome_threshold = " << num(cr.income_threshold) << "\nownership_prob = "
       << num(cr.ownership_prob) << "\ntier = " << quoted(cr.tier) << "\nluxury = " << (cr.luxury ? "true" : "false")
       << "\nbrands = " << string_array(cr.brands) << "\nage_months = " << mean_cv(cr.age_months) << "\n\n";
  }
  for (const auto& d : c.districts) {
    os << "[[districts]]\nname = " << quoted(d.name) << "\nrent_per_m2 = " << num(d.rent_per_m2)
       << "\nincome_rank = " << d.income_rank << "\n\n";
  }
  for (const auto& b : c.behavior_bands) {
    os << "[[behavior_bands]]\nincome_max = " << num(b.income_max) << "\nsubscriptions = " << mean_cv(b.subscriptions)
       << "\nshopping = " << mean_cv(b.shopping) << "\nsocial_media_prob = " << num(b.social_media_prob)
       << "\ncredit_card_prob = " << num(b.credit_card_prob) << "\n\n";
  }
  return os.str();
}

}  // namespace ubsb::synthgen
