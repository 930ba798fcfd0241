#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace aoa {

/// Seedable, splittable pseudo-random generator (SplitMix64 core).
///
/// Every stochastic operation in this library draws from an explicit Rng
/// stream, never from hidden global state. Independent substreams are derived
/// by hashing a (master seed, path...) address, so work units can be generated
/// in any order or in parallel with bit-identical results.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Derive the stream addressed by (seed, path...).
  static Rng stream(std::uint64_t seed,
                    std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix(seed ^ 0x5851f42d4c957f2dULL);
    for (std::uint64_t p : path) s = mix(s ^ mix(p + 0x9e3779b97f4a7c15ULL));
    return Rng(s);
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Uniform integer in [lo, hi], bounds inclusive.
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  /// Pair of independent standard normals (Box-Muller).
  std::pair<double, double> gaussian_pair() {
    const double u1 = uniform();  // 1 - u1 in (0, 1], log never -inf
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    const double a = 2.0 * M_PI * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

  double gaussian() { return gaussian_pair().first; }

  /// Circularly-symmetric complex gaussian with E|z|^2 = variance.
  std::complex<double> complex_gaussian(double variance) {
    const auto [x, y] = gaussian_pair();
    const double s = std::sqrt(variance * 0.5);
    return {s * x, s * y};
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Stream tags keeping the purposes of derived substreams disjoint.
namespace stream_tag {
inline constexpr std::uint64_t kDataset = 1;
inline constexpr std::uint64_t kFramework = 2;
inline constexpr std::uint64_t kNetworkInit = 3;
inline constexpr std::uint64_t kTraining = 4;
}  // namespace stream_tag

}  // namespace aoa
