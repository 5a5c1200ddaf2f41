#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace bthowen {

/// Deterministic random source. All draws go through next_u64/next_below so
/// that a given seed produces the same stream on every platform; the
/// implementation-defined std distributions are deliberately not used.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform value in [0, bound), bias-free via rejection sampling.
  uint64_t next_below(uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::next_below: bound must be positive");
    const uint64_t rem = (std::numeric_limits<uint64_t>::max() % bound + 1) % bound;
    if (rem == 0) return next_u64() % bound;
    const uint64_t limit = uint64_t{0} - rem;
    uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % bound;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (size_t i = values.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(next_below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bthowen
