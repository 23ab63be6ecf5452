#pragma once

#include <cstdint>
#include <random>

#include "reachot/dynamics.hpp"

namespace reachot {

/// Seeded engine with a portable uniform draw. std::uniform_real_distribution
/// is implementation-defined, which would break cross-platform reproducibility.
/// SplitMix64 finaliser; derives independent stream seeds from (seed, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  /// Fills `out` with a point drawn uniformly from `box`.
  template <typename Span>
  void fill_uniform(const BoxSet& box, Span out) {
    for (std::size_t k = 0; k < box.dim(); ++k) out[k] = uniform(box.lower()[k], box.upper()[k]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace reachot
