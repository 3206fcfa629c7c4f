#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace cfrs {

/**
 * Deterministic random stream with stable splitting.
 *
 * split() derives a child stream from the base seed and a tag only, never
 * from the parent's draw position, so parallel consumers (drops, Monte Carlo
 * evaluations) stay reproducible regardless of scheduling order. Gaussian
 * variates use an explicit Box-Muller transform on top of mt19937_64 bits so
 * sequences are identical across standard library implementations.
 */
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : base_seed_(seed), engine_(seed) {}

  RandomStream split(std::uint64_t tag) const {
    return RandomStream(mix(mix(base_seed_ + 0x9E3779B97F4A7C15ULL) ^ mix(tag)));
  }

  std::uint64_t seed() const { return base_seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal. Box-Muller pairs, one value cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    auto [a, b] = gaussian_pair();
    spare_ = b;
    has_spare_ = true;
    return a;
  }

  // Circularly-symmetric complex Gaussian with E|x|^2 = variance.
  std::complex<double> complex_gaussian(double variance) {
    auto [a, b] = gaussian_pair();
    const double s = std::sqrt(0.5 * variance);
    return {s * a, s * b};
  }

 private:
  std::pair<double, double> gaussian_pair() {
    // u1 in (0, 1] keeps the log finite.
    const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::uint64_t base_seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cfrs
