#ifndef UAMAP_RNG_HPP_
#define UAMAP_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>

namespace uamap {

/// SplitMix64 finalizer. Used for seed derivation only.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Documented seed-splitting rule: sub-stream `counter` of a base seed.
/// Stage counters used by the pipeline are listed in pipeline.hpp.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t counter) {
  return splitmix64(base + 0x9E3779B97F4A7C15ULL * (counter + 1));
}

/// Deterministic random stream. All transforms from raw 64-bit draws are
/// implemented here rather than via std::*_distribution so that the value
/// stream depends only on the seed, not on the standard library build.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller (two uniform draws per value).
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Zero-median Laplace with the given scale, via inverse CDF.
  double laplace(double scale) {
    double v = uniform01() - 0.5;  // [-0.5, 0.5)
    double t = 1.0 - 2.0 * std::abs(v);
    if (t < 1e-300) t = 1e-300;
    return (v < 0.0 ? scale : -scale) * std::log(t);
  }

  /// Index sampled from a discrete distribution (probabilities need not be
  /// exactly normalized; the walk uses their running sum).
  int categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty distribution");
    double u = uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  /// Fisher-Yates shuffle of an index range.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(gen_() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace uamap

#endif  // UAMAP_RNG_HPP_
