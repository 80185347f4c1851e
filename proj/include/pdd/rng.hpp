#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace pdd {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives the seed of an independent substream (weights, noise, subsampling,
// collocation, extraction, ...) from one master seed.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t s = master ^ (0xd1342543de82ef95ull * (stream + 1));
  return splitmix64(s);
}

// mt19937_64 with explicit distribution code. The standard pins the engine's
// output exactly but not the distributions', so uniform/normal are spelled
// out here to keep streams identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on the open interval (0, 1).
  double uniform01() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; two engine draws per call.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return x % n;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace pdd
