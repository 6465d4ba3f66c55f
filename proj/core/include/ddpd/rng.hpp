#pragma once

#include <cmath>
#include <cstdint>

namespace ddpd {

inline uint64_t splitmix64(uint64_t& s) {
  s += 0x9E3779B97F4A7C15ULL;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Counter-based generator: the stream is a pure function of its key, so draws
// for a given (seed, step, i, j) are identical regardless of evaluation order
// or thread placement.
class CounterRng {
 public:
  CounterRng(uint64_t seed, uint64_t step, uint64_t i, uint64_t j) {
    state_ = seed;
    absorb(step);
    absorb(i);
    absorb(j);
  }

  // Uniform in (0, 1].
  double u01() {
    const uint64_t x = splitmix64(state_);
    return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller, one spare cached per pair of uniforms.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = u01();
    const double u2 = u01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.28318530717958647692 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  void absorb(uint64_t x) {
    uint64_t s = state_ ^ (x + 0x9E3779B97F4A7C15ULL);
    state_ = splitmix64(s);
  }

  uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace ddpd
