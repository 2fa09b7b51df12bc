#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bigreg {

/// splitmix64 finalizer; used as a counter-based hash.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

/// Small counter-based generator. A (seed, stream) pair always yields the
/// same sequence, so parallel workers can each own a stream keyed by their
/// work-item index and produce thread-count independent results.
class StreamRng {
 public:
  StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(mix64(seed, stream)) {}

  std::uint64_t next() noexcept { return mix64(key_, counter_++); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n). Slight modulo bias is irrelevant for n << 2^64.
  std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

  /// Standard normal via Box-Muller (one value per call).
  double normal() noexcept {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bigreg
