#pragma once

#include <cstdint>
#include <random>

namespace airflux {

/// Seeded RNG with hand-rolled value mapping. std::mt19937_64 output is fully
/// specified by the standard; the distributions in <random> are not, so all
/// mappings from raw bits to values live here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, n). Rejection-sampled, exact.
  uint64_t next_below(uint64_t n) {
    if (n == 0) return 0;
    const uint64_t limit = n * ((~uint64_t{0}) / n);
    uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  /// Standard normal via Box-Muller (deterministic, stateless between calls).
  double next_gaussian() {
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace airflux
