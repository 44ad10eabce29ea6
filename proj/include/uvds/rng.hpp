#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace uvds {

/// Deterministic random source. mt19937_64 has a standard-mandated output
/// sequence, and the uniform/normal/shuffle transforms are written out here
/// instead of using std::*_distribution (whose algorithms are
/// implementation-defined), so a seed produces identical streams on every
/// platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    // u1 == 0 would blow up the log
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  /// Uniform integer in [0, bound). bound must be >= 1.
  std::size_t below(std::size_t bound) {
    return static_cast<std::size_t>(gen_() % bound);
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace uvds
