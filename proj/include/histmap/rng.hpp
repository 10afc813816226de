#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace histmap {

/// SplitMix64 stream. The state advances by the golden-gamma constant and
/// each output is a finalizer mix of the state, so sequences are bit-identical
/// on every platform and toolchain. Normal deviates use Box-Muller on top of
/// the 53-bit uniform, never the standard-library distributions (those are
/// not reproducible across implementations).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Index in [0, n).
  std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal deviate (Box-Muller, pairs cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_double();  // (0, 1], keeps log finite
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * kTwoPi_half * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * kTwoPi_half * u2);
  }

  /// Poisson draw by Knuth's product method; fine for small means.
  int poisson(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= next_double();
    } while (p > limit);
    return k - 1;
  }

 private:
  static constexpr double kTwoPi_half = 3.14159265358979323846;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Derives an independent substream seed from (seed, purpose, a, b) with
/// FNV-1a plus a SplitMix finalizer. Lets each (purpose, frame, element)
/// tuple own a stream, so enabling one perturbation never shifts the draws
/// of another.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view purpose,
                             std::int64_t a = 0, std::int64_t b = 0);

}  // namespace histmap
