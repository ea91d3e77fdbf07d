#pragma once

#include <cstdint>
#include <vector>

namespace clickgate {

/// Portable deterministic generator used everywhere randomness is needed.
///
/// This is splitmix64 (Steele, Lea & Flood): 64-bit counter state advanced by
/// the golden-ratio increment, output mixed by two xor-multiply rounds. The
/// algorithm is fixed so that dataset splits, synthetic fixtures, and oracle
/// backends reproduce bit-for-bit across platforms and implementations.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1): top 53 bits of next() scaled by 2^-53.
  double next_double() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound) via Lemire's multiply-shift reduction.
  /// bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) noexcept {
    using uint128 = unsigned __int128;
    return static_cast<std::uint64_t>(
        (static_cast<uint128>(next()) * static_cast<uint128>(bound)) >> 64);
  }

  /// Uniform integer in [lo, hi], inclusive on both ends.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) noexcept {
    return lo + static_cast<std::int64_t>(
                    next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  /// Fisher-Yates shuffle, drawing indices high-to-low with next_below.
  template <typename T>
  void shuffle(std::vector<T>& items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

/// Derives a child seed from a parent seed and a stream tag. Used to give
/// independent, order-insensitive randomness to per-sample / per-call draws.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  SplitMix64 rng(seed ^ (tag + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2)));
  return rng.next();
}

}  // namespace clickgate
