#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bandlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic per-sample stream: the state is keyed by (experiment seed,
// sample index), so samples can be generated in any order or concurrently
// while staying bitwise reproducible.  Gaussians are produced by an explicit
// Box-Muller transform rather than std::normal_distribution, whose output is
// implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t sample = 0)
      : eng_(splitmix64(seed ^ splitmix64(sample + 0x51ab5f2d9c3e1a47ULL))) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1) with 53-bit resolution
  double next_uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_uniform() - 1.0;
      v = 2.0 * next_uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace bandlab
