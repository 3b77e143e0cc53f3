#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace eqstream {

/// Derives an independent sub-seed from a base seed and a salt, so that
/// cells, sequences and readout heads built from the same repetition seed
/// do not share raw generator output. SplitMix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic random source. std::mt19937_64 is fully specified by the
/// standard; the uniform and normal transforms are pinned here instead of
/// using std::*_distribution, whose output is implementation-defined and
/// would break bit-reproducibility across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller. Consumes two raw draws per value; the
  /// first uniform is shifted into (0, 1] so the log never sees zero.
  double normal() {
    const double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kTwoPi * u2);
  }

  std::vector<double> normals(std::size_t n) {
    std::vector<double> out(n);
    for (auto& v : out) v = normal();
    return out;
  }

  /// Uniform integer in [0, n). Modulo bias is irrelevant at the grid sizes
  /// used here.
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  static constexpr double kTwoPi = 6.283185307179586476925286766559;
  std::mt19937_64 engine_;
};

}  // namespace eqstream
