#pragma once

// Seeded random source with portable output. std::mt19937_64 has a
// standard-defined sequence, and the bits-to-double conversion below is fixed
// arithmetic, so results are identical across platforms and library
// implementations (std::uniform_real_distribution would not be).

#include <cstdint>
#include <random>

namespace modur {

namespace detail {
/// SplitMix64 step; used to derive substream seeds that decorrelate from the
/// parent stream and from each other.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform double in [-bound, bound).
  double uniform_pm(double bound) { return uniform(-bound, bound); }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Rejection-free modulo is fine here: n is always tiny relative to 2^64.
    return engine_() % n;
  }

  /// Independent child stream; deterministic in (seed, stream).
  Rng fork(std::uint64_t stream) const {
    return Rng(detail::splitmix64(seed_ ^ detail::splitmix64(stream + 1)));
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace modur
