#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace fulllik {

/// Seedable 64-bit random source with named streams.
///
/// Each stream is a std::mt19937_64 seeded with splitmix64(seed ^ fnv1a(name)).
/// Uniform and normal variates are derived from the raw 64-bit output here
/// (not through <random> distributions, whose algorithms are
/// implementation-defined), so draws are identical across platforms.
class Rng {
 public:
  Rng(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via the Box-Muller transform (pairs are cached).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  /// Derives a child seed for a sub-stream, e.g. per column or per seed run.
  static std::uint64_t derive(std::uint64_t seed, std::string_view stream);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace fulllik
