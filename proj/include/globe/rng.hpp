#pragma once
// Counter-based per-slot random source.
//
// Every draw for slot t is produced by a generator keyed on (seed, t), so an
// observation is a pure function of (seed, config, t): slots can be generated
// out of order, replayed, or shared across runs without carrying RNG state.

#include <cmath>
#include <cstdint>

namespace globe {

namespace detail {
// splitmix64 finalizer; decorrelates consecutive counters.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}
}  // namespace detail

// xoshiro256++ seeded from splitmix64(hash(seed, t)).
class SlotRng {
 public:
  SlotRng(uint64_t seed, uint64_t counter) {
    uint64_t x = detail::mix64(seed ^ 0x6a09e667f3bcc908ull);
    x = detail::mix64(x ^ counter);
    for (auto& w : s_) {
      x = detail::mix64(x);
      w = x;
    }
  }

  using result_type = uint64_t;
  static constexpr uint64_t min() { return 0; }
  static constexpr uint64_t max() { return ~0ull; }
  uint64_t operator()() { return next(); }

  uint64_t next() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Poisson draw; exact inversion for small means, Hormann's PTRS
  // transformed-rejection for large ones. Deterministic on every platform
  // (unlike std::poisson_distribution, whose algorithm is
  // implementation-defined).
  long poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  long poisson_inversion(double mean) {
    const double l = std::exp(-mean);
    long k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > l);
    return k - 1;
  }

  long poisson_ptrs(double mean) {
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      double us = 0.5 - std::fabs(u);
      double kd = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<long>(kd);
      if (kd < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kd * log_mean - mean - std::lgamma(kd + 1.0)) {
        return static_cast<long>(kd);
      }
    }
  }

  uint64_t s_[4];
};

}  // namespace globe
