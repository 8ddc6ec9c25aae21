#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

namespace maxent {

/// Identifies an independent random sequence: all randomness in the library is
/// a pure function of (seed, stream_index, counter).
struct SeededStream {
  std::uint64_t seed = 1;
  std::uint64_t stream_index = 0;

  SeededStream substream(std::uint64_t index) const;
};

/// Stafford's variant 13 of the SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw k of block b in stream s is
/// mix64(key(seed, s, b) + (k + 1) * golden). Satisfies
/// UniformRandomBitGenerator so it plugs into <algorithm> and <random>.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(const SeededStream& stream, std::uint64_t block = 0)
      : key_(mix64(mix64(stream.seed ^ 0x6a09e667f3bcc909ULL) ^
                   mix64(stream.stream_index + 0xbb67ae8584caa73bULL) ^
                   mix64(block * 0x3c6ef372fe94f82bULL + 0xa54ff53a5f1d36f1ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix64(key_ + (++counter_) * 0x9e3779b97f4a7c15ULL); }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by Box-Muller; always consumes two uniforms.
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline SeededStream SeededStream::substream(std::uint64_t index) const {
  return {seed, mix64(stream_index * 0x9e3779b97f4a7c15ULL + index + 1)};
}

}  // namespace maxent
