#pragma once

#include <cstdint>

namespace gbpplan {

// splitmix64: tiny, platform-independent generator used for every seeded
// stream in the project so traces never depend on libstdc++ internals.
struct SplitMix {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased bounded draw by rejection.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t limit = ~0ull - (~0ull % n);
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

/// Decorrelated stream key: distinct (a, b) give independent-looking streams
/// off one root seed.
inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  SplitMix s{seed ^ (a * 0x9e3779b97f4a7c15ull) ^ (b << 32)};
  return s.next();
}

}  // namespace gbpplan
