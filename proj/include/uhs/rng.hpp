#pragma once

// Counter-based random source used everywhere a seed appears.
//
// The generator is SplitMix64 evaluated at a counter: draw n of stream `seed`
// is mix64(seed + (n + 1) * 0x9E3779B97F4A7C15). Uniform doubles take the top
// 53 bits; normals use the Box-Muller cosine branch with u1 in (0, 1]. Nothing
// here goes through <random> distributions, whose outputs are
// implementation-defined, so any language can reproduce the streams.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace uhs {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent child seed, e.g. per-simulation seeds from a
/// master seed.
constexpr std::uint64_t hash_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(master ^ mix64(index + kGolden));
}

class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  constexpr std::uint64_t at(std::uint64_t counter) const noexcept {
    return mix64(seed_ + (counter + 1) * kGolden);
  }

  constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

  /// Uniform in [0, 1).
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Unbiased integer in [0, bound) by rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return r % bound;
  }

  /// Standard normal; consumes two draws.
  double normal() noexcept {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates with the counter generator.
template <typename Vec>
void shuffle(Vec& values, CounterRng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    using std::swap;
    swap(values[i - 1], values[j]);
  }
}

}  // namespace uhs
