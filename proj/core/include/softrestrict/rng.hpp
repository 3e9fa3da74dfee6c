#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "softrestrict/stats.hpp"

namespace softrestrict {

/// splitmix64 finalizer; maps any 64-bit value to a well-mixed one.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derive an independent sub-stream seed from (root seed, stream name, index).
/// Replications seeded this way are reproducible regardless of scheduling.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream,
                                 std::uint64_t index) {
  std::uint64_t h = 1469598103934665603ull; // FNV-1a over the stream name
  for (const char ch : stream) h = (h ^ static_cast<unsigned char>(ch)) * 1099511628211ull;
  return mix64(mix64(seed ^ h) ^ index);
}

/// Deterministic random stream. Draws are identical across platforms: the
/// engine is the fully specified mt19937_64 and normals go through the
/// inverse CDF rather than a library-defined distribution.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t bits() { return gen_(); }

  /// Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double normal() { return norm_ppf(uniform()); }

private:
  std::mt19937_64 gen_;
};

} // namespace softrestrict
