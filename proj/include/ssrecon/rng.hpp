#pragma once

// Counter-based random streams.
//
// A stream is a 64-bit key plus a counter. Draw i of a stream is
// splitmix64(key + (i + 1) * 0x9E3779B97F4A7C15), so any draw can be
// recomputed from (key, i) alone. Substreams derive a fresh key from the
// parent key, a tag (FNV-1a hash of a name) and an index, which gives every
// item / epoch / shard its own independent, re-drawable stream. Normal
// deviates use Box-Muller so results do not depend on the standard library.

#include <complex>
#include <cstdint>
#include <string_view>

namespace ssrecon {

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t key = 0) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return splitmix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }
  std::uint64_t operator()() { return next_u64(); }
  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  /// Uniform integer on [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);
  /// Standard normal.
  double normal();
  /// Circular complex Gaussian with total variance sigma^2 (sigma^2 / 2 per channel).
  std::complex<double> complex_normal(double sigma);

  Rng substream(std::string_view name, std::uint64_t index = 0) const;
  Rng substream(std::string_view name, std::uint64_t i, std::uint64_t j) const;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ssrecon
