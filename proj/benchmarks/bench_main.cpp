#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ubsb/config.hpp"
#include "ubsb/dataio.hpp"
#include "ubsb/encode.hpp"
#include "ubsb/gbdt.hpp"
#include "ubsb/metrics.hpp"
#include "ubsb/synthgen.hpp"

using namespace ubsb;

namespace {

const synthgen::MarginalConfig& config() {
  static const auto cfg = synthgen::load_config(UBSB_DEFAULT_CONFIG);
  return cfg;
}

std::vector<Record> rows(std::size_t n) {
  std::vector<Record> out;
  out.reserve(n);
  for (const auto& p : synthgen::generate(config(), n, 42)) out.push_back(p.record);
  return out;
}

void scores(std::size_t n, std::vector<double>& a, std::vector<double>& b, std::vector<int>& y) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  a.resize(n);
  b.resize(n);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = i % 5 == 0;
    a[i] = z(rng) + 0.8 * y[i];
    b[i] = z(rng) + 1.2 * y[i];
  }
}

void BM_RocAuc(benchmark::State& state) {
  std::vector<double> a, b;
  std::vector<int> y;
  scores(static_cast<std::size_t>(state.range(0)), a, b, y);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::roc_auc(a, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RocAuc)->Arg(10000)->Arg(100000);

void BM_DeLongPaired(benchmark::State& state) {
  std::vector<double> a, b;
  std::vector<int> y;
  scores(static_cast<std::size_t>(state.range(0)), a, b, y);
  for (auto _ : state) benchmark::DoNotOptimize(metrics::delong_paired(a, b, y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeLongPaired)->Arg(10000)->Arg(100000);

void BM_Generate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(synthgen::generate(config(), n, 42));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_EncodeTree(benchmark::State& state) {
  const auto data = rows(static_cast<std::size_t>(state.range(0)));
  const Date ref = config().reference_date;
  for (auto _ : state) {
    const auto enc = encode::fit_encoder(data, dataio::FeatureSet::full(), encode::Mode::tree, ref);
    benchmark::DoNotOptimize(encode::transform(enc, data));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeTree)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_FitGbdt(benchmark::State& state) {
  const auto data = rows(static_cast<std::size_t>(state.range(0)));
  const auto enc =
      encode::fit_encoder(data, dataio::FeatureSet::full(), encode::Mode::tree, config().reference_date);
  const auto x = encode::transform(enc, data);
  const auto y = dataio::labels_of(data);
  auto params = models::GbdtParams::for_preset(models::GbdtPreset::xgb_like);
  params.n_rounds_max = 50;
  for (auto _ : state) benchmark::DoNotOptimize(models::fit_gbdt(x, y, params));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FitGbdt)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
