#pragma once

// Seeded random source with hand-rolled distribution mappings. std library
// distributions are not byte-stable across standard libraries, and chain and
// fixture reproducibility here is a contract, so only the (standardized)
// mt19937_64 engine is taken from std.

#include <cmath>
#include <cstdint>
#include <random>

namespace pl6 {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller (pairs cached).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  /// Poisson draw; exact inversion below mean 50, normal approximation above
  /// (relative moment error < 1e-4 there, well under every use here).
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 50.0) {
      const double limit = std::exp(-mean);
      double prod = uniform();
      std::uint64_t n = 0;
      while (prod > limit) {
        prod *= uniform();
        ++n;
      }
      return n;
    }
    const double draw = std::round(normal(mean, std::sqrt(mean)));
    return draw < 0.0 ? 0 : static_cast<std::uint64_t>(draw);
  }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // multiply-shift rejection-free mapping is fine at these scales
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace pl6
