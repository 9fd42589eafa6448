#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace slicecluster {

/// Seeded random stream whose output is identical on every platform.
///
/// The engine is std::mt19937_64, whose sequence the standard fixes. The
/// standard distributions are implementation-defined, so every draw below is
/// derived from raw engine output by hand.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Uniform integer in [0, bound) without modulo bias.
  std::uint64_t below(std::uint64_t bound);
  bool bernoulli(double p) { return uniform01() < p; }
  /// Marsaglia polar method; the spare deviate is cached.
  double normal(double mean, double stddev);
  /// Knuth's product method, split into chunks for large means.
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Stable per-stage seed from a global seed and a stage name.
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage);

}  // namespace slicecluster
