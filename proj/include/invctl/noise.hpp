#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace invctl {

/// Counter-based Gaussian stream: the k-th draw depends only on (seed, stream, k),
/// so dataset and online noise never share state and any draw can be regenerated.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t stream) : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const { return mix(key_ ^ mix(counter)); }

  // Uniform on (0, 1); never returns 0 so log() below is safe.
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(std::uint64_t counter, double lo, double hi) const { return lo + (hi - lo) * uniform(counter); }

  // Box-Muller on two decorrelated uniforms.
  double normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

// Stream ids keep the dataset and online noise independent for one seed.
namespace streams {
inline constexpr std::uint64_t collection = 1;
inline constexpr std::uint64_t dataset_noise = 2;
inline constexpr std::uint64_t online_noise = 3;
}  // namespace streams

}  // namespace invctl
