#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace sketchret {

/// Seeded generator used by every randomized stage. The draw helpers below avoid the
/// implementation-defined std distributions so seeded outputs match across standard libraries.
using Rng = std::mt19937_64;

/// Per-item seed derived from the master seed and an item identifier (FNV-1a + splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::string_view item_id);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t item);

/// Uniform in [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

/// Uniform in [0, n). n must be positive.
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

/// Standard normal via Box-Muller.
double standard_normal(Rng& rng);

template <class It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = uniform_index(rng, i);
    std::iter_swap(first + (i - 1), first + j);
  }
}

}  // namespace sketchret
