#include "slicecluster/rng.hpp"

#include <cmath>

namespace slicecluster {

double SeededRng::uniform01() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

std::uint64_t SeededRng::below(std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % bound);
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % bound;
}

double SeededRng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform01() - 1.0;
    v = 2.0 * uniform01() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return mean + stddev * u * f;
}

std::uint64_t SeededRng::poisson(double mean) {
  constexpr double kChunk = 32.0;
  std::uint64_t total = 0;
  while (mean > 0.0) {
    const double step = mean > kChunk ? kChunk : mean;
    mean -= step;
    const double limit = std::exp(-step);
    double prod = uniform01();
    while (prod > limit) {
      ++total;
      prod *= uniform01();
    }
  }
  return total;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view stage) {
  // FNV-1a over the stage name.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(global_seed) ^ h);
}

}  // namespace slicecluster
