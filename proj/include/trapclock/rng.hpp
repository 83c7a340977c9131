#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace trapclock {

// SplitMix64 finalizer (Steele, Lea, Flood 2014). Bijective on 64-bit words
// with full avalanche; every seed derivation and the environment field go
// through it.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// Child key for (parent, index). Used for env_seed_i = derive(master, i),
// traj_seed_ij = derive(env_seed_i, j) and for sub-stream separation.
constexpr std::uint64_t derive(std::uint64_t parent, std::uint64_t index) noexcept {
  return mix64(parent ^ mix64(index * kGoldenGamma + 0x632be59bd9b4e019ULL));
}

// Named sub-streams of one trajectory. Holding times, directions and
// discrete marks never share draws, so switching chain kind leaves the site
// sequence untouched.
enum class Substream : std::uint64_t {
  kHolding = 1,
  kDirection = 2,
  kMark = 3,
  kEnvironment = 4,
  kAux = 5,
};

// Counter-based generator: output i is mix64(key + i * gamma). Any draw can be
// recomputed from (key, counter) alone. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr explicit CounterRng(std::uint64_t key = 0) noexcept : key_(key) {}
  constexpr CounterRng(std::uint64_t seed, Substream stream) noexcept
      : key_(derive(seed, static_cast<std::uint64_t>(stream))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * kGoldenGamma);
  }

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Top 53 bits as k 2^-53; k = 0 maps to 2^-54 so the result lies in (0, 1).
constexpr double to_open_unit(std::uint64_t h) noexcept {
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return u > 0.0 ? u : 0x1.0p-54;
}

template <class Rng>
double uniform_open(Rng& rng) {
  return to_open_unit(rng());
}

// Mean-one exponential by inversion.
template <class Rng>
double standard_exponential(Rng& rng) {
  return -std::log(uniform_open(rng));
}

template <class Rng>
double standard_normal(Rng& rng) {
  // Box-Muller without caching so that the draw count per call is fixed.
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace trapclock
