#pragma once

// Platform-independent randomness. Every random draw in the harness comes
// from SplitMix64 streams whose seeds are derived from one base seed, so
// results are bit-identical across compilers and standard libraries (the
// std:: distributions are implementation-defined and are never used).
//
//   mix64(z)          = SplitMix64 finalizer
//   derive_seed(b, i) = mix64(b + 0x9E3779B97F4A7C15 * (i + 1))   (mod 2^64)
//   uniform_below(n)  = rejection sampling on next() % n
//   uniform01()       = (next() >> 11) * 2^-53

#include <cstdint>
#include <string_view>

namespace vlaprobe {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return mix64(base + kGolden * (index + 1));
}

// FNV-1a, used to fold string identifiers (scenario ids) into seeds.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) : state_(seed) {}

  constexpr std::uint64_t next() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform integer in [0, n); n must be positive.
  constexpr std::uint64_t uniform_below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform01() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

}  // namespace vlaprobe
