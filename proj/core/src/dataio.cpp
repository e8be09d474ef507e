#include "ubsb/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "ubsb/error.hpp"
#include "ubsb/random.hpp"

namespace ubsb::dataio {
namespace {

std::string format_number(double v) {
  char buf[32];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  return buf;
}

const char* format_bool(bool b) { return b ? "true" : "false"; }

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

class CellParser {
 public:
  CellParser(std::size_t row, const std::string& source) : row_(row), source_(source) {}

  [[noreturn]] void fail(Column c, const std::string& what) const {
    throw DataError(source_ + ": row " + std::to_string(row_) + ", column " + std::string(column_name(c)) + ": " +
                    what);
  }

  double number(std::string_view cell, Column c) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v)) {
      fail(c, "not a number: '" + std::string(cell) + "'");
    }
    return v;
  }

  std::int64_t integer(std::string_view cell, Column c) const {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
      fail(c, "not an integer: '" + std::string(cell) + "'");
    }
    return v;
  }

  bool boolean(std::string_view cell, Column c) const {
    if (cell == "true") return true;
    if (cell == "false") return false;
    fail(c, "not a boolean (true/false): '" + std::string(cell) + "'");
  }

  Date date(std::string_view cell, Column c) const {
    try {
      return parse_date(cell);
    } catch (const DataError& e) {
      fail(c, e.what());
    }
  }

  template <typename Fn>
  auto wrap(Column c, Fn&& fn) const {
    try {
      return fn();
    } catch (const DataError& e) {
      fail(c, e.what());
    }
  }

 private:
  std::size_t row_;
  const std::string& source_;
};

}  // namespace

void check_ids(std::span<const Record> rows) {
  std::vector<char> seen(rows.size() + 1, 0);
  for (const auto& r : rows) {
    if (r.id < 1 || static_cast<std::size_t>(r.id) > rows.size()) {
      throw DataError("ids must be contiguous from 1; found id " + std::to_string(r.id));
    }
    if (seen[static_cast<std::size_t>(r.id)]) throw DataError("duplicate id " + std::to_string(r.id));
    seen[static_cast<std::size_t>(r.id)] = 1;
  }
}

std::string format_record(const Record& r) {
  std::string s;
  s.reserve(256);
  auto add = [&](std::string_view v) {
    if (!s.empty()) s += ',';
    s += v;
  };
  s += std::to_string(r.id);
  add(std::to_string(r.age));
  add(to_string(r.education));
  add(to_string(r.employment_status));
  add(r.job);
  add(format_number(r.monthly_income));
  add(r.phone_model);
  add(format_date(r.phone_purchase_date));
  add(format_bool(r.owns_car));
  add(r.car_brand);
  add(r.car_purchase_date ? format_date(*r.car_purchase_date) : std::string());
  add(r.home_district);
  add(format_bool(r.owns_home));
  add(format_number(r.monthly_rent));
  add(format_bool(r.owns_credit_card));
  add(format_number(r.monthly_subscriptions));
  add(std::to_string(r.online_shopping_frequency));
  add(format_bool(r.social_media_active));
  add(std::to_string(r.delinquency_FL));
  return s;
}

void write_csv(const Dataset& dataset, std::ostream& out) {
  for (int i = 0; i < kColumnCount; ++i) {
    if (i) out << ',';
    out << column_name(static_cast<Column>(i));
  }
  out << '\n';
  for (const auto& r : dataset.rows) out << format_record(r) << '\n';
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  write_csv(dataset, out);
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Dataset read_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(source + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  std::set<std::string_view> present(header.begin(), header.end());
  for (Column c : all_columns()) {
    if (!present.count(column_name(c))) {
      throw SchemaError(source + ": missing column '" + std::string(column_name(c)) + "'");
    }
  }
  for (auto h : header) {
    if (!column_from_name(h)) throw SchemaError(source + ": unexpected column '" + std::string(h) + "'");
  }
  if (header.size() != static_cast<std::size_t>(kColumnCount)) {
    throw SchemaError(source + ": duplicate columns in header");
  }
  for (int i = 0; i < kColumnCount; ++i) {
    if (header[static_cast<std::size_t>(i)] != column_name(static_cast<Column>(i))) {
      throw SchemaError(source + ": column '" + std::string(column_name(static_cast<Column>(i))) +
                        "' out of order (found '" + std::string(header[static_cast<std::size_t>(i)]) + "' at position " +
                        std::to_string(i + 1) + ")");
    }
  }

  Dataset ds;
  std::unordered_set<std::int64_t> ids;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto cells = split_commas(line);
    if (cells.size() != static_cast<std::size_t>(kColumnCount)) {
      throw DataError(source + ": row " + std::to_string(row) + ": expected " + std::to_string(kColumnCount) +
                      " cells, found " + std::to_string(cells.size()));
    }
    CellParser p(row, source);
    auto cell = [&](Column c) { return cells[static_cast<std::size_t>(c)]; };
    Record r;
    r.id = p.integer(cell(Column::id), Column::id);
    r.age = static_cast<int>(p.integer(cell(Column::age), Column::age));
    r.education = p.wrap(Column::education, [&] { return parse_education(cell(Column::education)); });
    r.employment_status =
        p.wrap(Column::employment_status, [&] { return parse_employment_status(cell(Column::employment_status)); });
    r.job = std::string(cell(Column::job));
    r.monthly_income = p.number(cell(Column::monthly_income), Column::monthly_income);
    r.phone_model = std::string(cell(Column::phone_model));
    r.phone_purchase_date = p.date(cell(Column::phone_purchase_date), Column::phone_purchase_date);
    r.owns_car = p.boolean(cell(Column::owns_car), Column::owns_car);
    r.car_brand = std::string(cell(Column::car_brand));
    if (!cell(Column::car_purchase_date).empty()) {
      r.car_purchase_date = p.date(cell(Column::car_purchase_date), Column::car_purchase_date);
    }
    r.home_district = std::string(cell(Column::home_district));
    r.owns_home = p.boolean(cell(Column::owns_home), Column::owns_home);
    r.monthly_rent = p.number(cell(Column::monthly_rent), Column::monthly_rent);
    r.owns_credit_card = p.boolean(cell(Column::owns_credit_card), Column::owns_credit_card);
    r.monthly_subscriptions = p.number(cell(Column::monthly_subscriptions), Column::monthly_subscriptions);
    r.online_shopping_frequency =
        static_cast<int>(p.integer(cell(Column::online_shopping_frequency), Column::online_shopping_frequency));
    r.social_media_active = p.boolean(cell(Column::social_media_active), Column::social_media_active);
    const auto label = p.integer(cell(Column::delinquency_FL), Column::delinquency_FL);
    if (label != 0 && label != 1) p.fail(Column::delinquency_FL, "label must be 0 or 1");
    r.delinquency_FL = static_cast<int>(label);
    if (!ids.insert(r.id).second) {
      throw DataError(source + ": row " + std::to_string(row) + ": duplicate id " + std::to_string(r.id));
    }
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

Dataset read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return read_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// Folds

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) out.push_back(i);
  }
  return out;
}

nlohmann::json FoldPlan::to_json() const {
  return {{"k", k}, {"seed", seed}, {"assignments", assignments}};
}

FoldPlan FoldPlan::from_json(const nlohmann::json& j) {
  FoldPlan p;
  p.k = j.at("k").get<int>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.assignments = j.at("assignments").get<std::vector<int>>();
  return p;
}

namespace {

void shuffle(std::vector<std::size_t>& v, RandomStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

FoldPlan stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("stratified_kfold: k must be >= 2");
  if (labels.size() < static_cast<std::size_t>(k)) throw DataError("stratified_kfold: fewer rows than folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.empty() || neg.empty()) throw DataError("stratified_kfold: both classes must be present");
  RandomStream rng = RandomStream::derive(seed, StreamDomain::folds, 0);
  shuffle(pos, rng);
  shuffle(neg, rng);
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(labels.size(), 0);
  std::size_t slot = 0;
  for (auto i : pos) plan.assignments[i] = static_cast<int>(slot++ % static_cast<std::size_t>(k));
  for (auto i : neg) plan.assignments[i] = static_cast<int>(slot++ % static_cast<std::size_t>(k));
  return plan;
}

void check_fold_prevalence(const FoldPlan& plan, std::span<const int> labels) {
  if (plan.assignments.size() != labels.size()) throw DataError("fold plan does not match label count");
  std::vector<std::size_t> n(static_cast<std::size_t>(plan.k), 0), p(static_cast<std::size_t>(plan.k), 0);
  std::size_t total_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int f = plan.assignments[i];
    if (f < 0 || f >= plan.k) throw DataError("fold index out of range");
    ++n[static_cast<std::size_t>(f)];
    p[static_cast<std::size_t>(f)] += labels[i] ? 1 : 0;
    total_pos += labels[i] ? 1 : 0;
  }
  const double overall = static_cast<double>(total_pos) / static_cast<double>(labels.size());
  for (int f = 0; f < plan.k; ++f) {
    const double nf = static_cast<double>(n[static_cast<std::size_t>(f)]);
    if (nf == 0) throw DataError("fold " + std::to_string(f) + " is empty");
    const double rate = static_cast<double>(p[static_cast<std::size_t>(f)]) / nf;
    if (std::abs(rate - overall) > 1.0 / nf + 1e-12) {
      throw DataError("fold " + std::to_string(f) + " prevalence " + std::to_string(rate) + " deviates from " +
                      std::to_string(overall) + " by more than one record");
    }
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(std::span<const int> labels,
                                                                               double fraction,
                                                                               std::uint64_t seed) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  RandomStream rng = RandomStream::derive(seed, StreamDomain::sampling, 0);
  shuffle(pos, rng);
  shuffle(neg, rng);
  std::vector<std::size_t> first, second;
  for (auto* cls : {&pos, &neg}) {
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cls->size())));
    if (cls->size() >= 2) take = std::clamp<std::size_t>(take, 1, cls->size() - 1);
    first.insert(first.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(take));
    second.insert(second.end(), cls->begin() + static_cast<std::ptrdiff_t>(take), cls->end());
  }
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {std::move(first), std::move(second)};
}

// ---------------------------------------------------------------------------
// Feature sets

FeatureSet FeatureSet::demo() {
  return {"Demo",
          {Column::age, Column::education, Column::employment_status, Column::job, Column::monthly_income,
           Column::home_district, Column::owns_home}};
}

FeatureSet FeatureSet::alternative() {
  return {"Alternative",
          {Column::phone_model, Column::phone_purchase_date, Column::owns_car, Column::car_brand,
           Column::car_purchase_date, Column::owns_credit_card, Column::monthly_subscriptions,
           Column::online_shopping_frequency, Column::social_media_active, Column::monthly_rent}};
}

FeatureSet FeatureSet::full() {
  FeatureSet fs = demo();
  fs.name = "Full";
  const auto alt = alternative();
  fs.columns.insert(fs.columns.end(), alt.columns.begin(), alt.columns.end());
  return fs;
}

FeatureSet FeatureSet::custom(std::string name, const std::vector<std::string>& column_names) {
  if (column_names.empty()) throw DataError("feature set '" + name + "' is empty");
  FeatureSet fs{std::move(name), {}};
  for (const auto& cn : column_names) {
    const auto c = column_from_name(cn);
    if (!c) throw DataError("unknown column '" + cn + "'");
    if (*c == Column::id || *c == Column::delinquency_FL) {
      throw DataError("column '" + cn + "' cannot be used as a feature");
    }
    if (fs.contains(*c)) throw DataError("duplicate column '" + cn + "'");
    fs.columns.push_back(*c);
  }
  return fs;
}

FeatureSet FeatureSet::by_name(const std::string& name) {
  if (name == "Demo" || name == "demo") return demo();
  if (name == "Full" || name == "full") return full();
  throw DataError("unknown feature set '" + name + "' (expected Demo or Full)");
}

bool FeatureSet::contains(Column c) const { return std::find(columns.begin(), columns.end(), c) != columns.end(); }

FeatureView feature_view(std::span<const Record> rows, const FeatureSet& feature_set) {
  if (feature_set.columns.empty()) throw DataError("feature set '" + feature_set.name + "' is empty");
  for (Column c : feature_set.columns) {
    if (c == Column::id || c == Column::delinquency_FL) {
      throw DataError("column '" + std::string(column_name(c)) + "' cannot be used as a feature");
    }
  }
  FeatureView view;
  view.columns = feature_set.columns;
  view.rows.reserve(rows.size());
  view.labels.reserve(rows.size());
  for (const auto& r : rows) {
    std::vector<FieldValue> row;
    row.reserve(view.columns.size());
    for (Column c : view.columns) row.push_back(field_value(r, c));
    view.rows.push_back(std::move(row));
    view.labels.push_back(r.delinquency_FL);
  }
  return view;
}

std::vector<int> labels_of(std::span<const Record> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.delinquency_FL);
  return out;
}

}  // namespace ubsb::dataio
