#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace oppsched {

// Seedable, splittable generator. Every stochastic operation takes one of
// these explicitly; uniform/exponential draws bypass std::*_distribution so
// that streams are reproducible across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(seed), engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Unit-mean exponential; finite for every engine output.
  double exponential() { return -std::log1p(-uniform01()); }

  std::uint64_t root_seed() const { return root_; }

  // Child stream determined by (root seed, tag) only, independent of how much
  // of this stream has been consumed.
  Rng split(std::uint64_t tag) const {
    return Rng(mix(root_ ^ mix(tag + 0x9E3779B97F4A7C15ull)));
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t root_;
  std::mt19937_64 engine_;
};

}  // namespace oppsched
