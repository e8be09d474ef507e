#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace ubsb {

/// SplitMix64 finalizer chained over the given words. Used to derive
/// independent sub-stream seeds from (seed, domain, index, ...) tuples.
std::uint64_t mix_seed(std::initializer_list<std::uint64_t> words) noexcept;

/// Stream identifiers for `RandomStream::derive`.
enum class StreamDomain : std::uint64_t {
  generation = 1,
  calibration = 2,
  labels = 3,
  folds = 4,
  gbdt = 5,
  forest = 6,
  tree = 7,
  tpe = 8,
  bootstrap = 9,
  counterfactual = 10,
  sampling = 11,
};

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derive(std::uint64_t seed, StreamDomain domain, std::uint64_t index,
                             std::uint64_t attempt = 0) {
    return RandomStream(mix_seed({seed, static_cast<std::uint64_t>(domain), index, attempt}));
  }

  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [lo, hi], both inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  bool bernoulli(double p);
  double normal(double mean, double sd);
  /// Gamma draw parameterized by mean and coefficient of variation; cv == 0 returns mean.
  double gamma_mean_cv(double mean, double cv);
  std::int64_t poisson(double mean);
  /// Index drawn proportionally to non-negative weights (at least one positive).
  std::size_t weighted_index(std::span<const double> weights);
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ubsb
