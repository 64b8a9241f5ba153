#pragma once

#include <cstdint>
#include <random>

namespace dsf {

/// splitmix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for sub-stream `index` of purpose `stream` under a master seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Unbiased integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform() < p; }
  double normal(double mean = 0.0, double stddev = 1.0);
  double gamma(double shape, double scale);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dsf
