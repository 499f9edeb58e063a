#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace ysm {

/// SplitMix64 finalizer. Used both as a seeder and as the stream-derivation mix.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * UINT64_C(0xBF58476D1CE4E5B9);
  z = (z ^ (z >> 27)) * UINT64_C(0x94D049BB133111EB);
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  constexpr std::uint64_t next() noexcept {
    state_ += UINT64_C(0x9E3779B97F4A7C15);
    return splitmix64_mix(state_);
  }

 private:
  std::uint64_t state_;
};

/// Seed of stream `index` under `master`:
///   mix(mix(master + g) ^ (index * g2 + g))
/// with g = 0x9E3779B97F4A7C15 (golden ratio) and g2 = 0xD1B54A32D192ED03.
/// Every replicate / sample chunk draws from its own stream, so results do not
/// depend on how work is distributed across threads.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
  constexpr std::uint64_t g = UINT64_C(0x9E3779B97F4A7C15);
  constexpr std::uint64_t g2 = UINT64_C(0xD1B54A32D192ED03);
  return splitmix64_mix(splitmix64_mix(master + g) ^ (index * g2 + g));
}

/// xoshiro256** 1.0 (Blackman & Vigna), state filled from SplitMix64(seed).
/// Satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) noexcept { reseed(seed); }

  void reseed(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0,1): (top 53 bits + 1/2) * 2^-53.
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard exponential by inversion.
  double exponential() noexcept { return -std::log(uniform()); }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4]{};
};

}  // namespace ysm
