#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace molrule {

// Labeled deterministic random stream. Counter-based so that draws depend
// only on (seed, purpose, counter); streams with distinct labels are
// independent and results are identical across platforms and compilers.
// None of the std <random> distributions are used anywhere: their output is
// implementation-defined and would break cross-machine reproducibility.
enum class StreamPurpose : std::uint64_t {
  kInit = 0x9d8f3c1ab64d02e1ull,
  kShuffle = 0x5bf0f1e7c9a74e35ull,
  kDropout = 0x2c6e91a37d5b8f13ull,
  kNoise = 0x7a1d4b963e8fc257ull,
  kSynth = 0xe3b59c2741f6ad89ull,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace detail

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, StreamPurpose purpose)
      : base_(detail::splitmix64(seed ^ static_cast<std::uint64_t>(purpose))) {}

  std::uint64_t next_u64() { return at(counter_++); }

  // Pure function of (stream label, index); used for addressable draws such
  // as dropout masks shared between related forward passes.
  std::uint64_t at(std::uint64_t index) const {
    return detail::splitmix64(base_ + 0x632be59bd9b4e019ull * (index + 1));
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Box-Muller. Consumes two uniforms per call; the second variate is
  // discarded to keep the stream position a pure function of call count.
  double next_normal() {
    double u1 = next_uniform();
    double u2 = next_uniform();
    // Guard against log(0).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Unbiased bounded draw, Lemire multiply-shift with rejection.
  std::uint64_t next_below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (0ull - n) % n;
      while (lo < t) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Fisher-Yates with explicit draws; std::shuffle is not portable.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

}  // namespace molrule
