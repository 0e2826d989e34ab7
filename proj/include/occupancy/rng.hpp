#pragma once

// Reproducible random streams. xoshiro256++ seeded through splitmix64;
// independent streams are keyed by (seed, stream index) so a replicate draws
// the same numbers whichever thread runs it.

#include <array>
#include <cstdint>
#include <limits>

namespace occupancy {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t state) : state_(state) {}
  std::uint64_t next();

 private:
  std::uint64_t state_;
};

/// The splitmix64 output function applied to a single word.
std::uint64_t mix64(std::uint64_t x);

class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256pp(std::uint64_t seed);
  /// Stream `index` of the family rooted at `seed`.
  static Xoshiro256pp stream(std::uint64_t seed, std::uint64_t index);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1) with 53-bit resolution.
  double uniform();
  /// Standard normal by inversion.
  double normal();
  bool bernoulli(double prob) { return uniform() < prob; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Inverse of the standard normal CDF (Wichura, AS 241, about 1e-16 relative).
double normal_quantile(double prob);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace occupancy
