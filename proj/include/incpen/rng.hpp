#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace incpen {

// Counter-based generator: draw j of stream `seed` is mix(seed, j), so any
// draw can be reproduced without replaying the stream and streams can be
// split by deriving new seeds.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed = 0, std::uint64_t counter = 0) noexcept
      : seed_(seed), counter_(counter) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next_u64() noexcept {
    return mix(mix(seed_) ^ (counter_++ * 0xd1b54a32d192ed03ULL));
  }

  // Uniform index in [0, m) from exactly one 64-bit draw (multiply-high;
  // bias is at most m / 2^64).
  std::uint64_t uniform_index(std::uint64_t m) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * m) >> 64);
  }

  // Uniform in (0, 1): 53 random bits, never exactly 0.
  double uniform01() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; two draws per call, no cached spare.
  double normal() noexcept {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Derives an independent stream seed.
  static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) noexcept {
    return mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_;
};

}  // namespace incpen
