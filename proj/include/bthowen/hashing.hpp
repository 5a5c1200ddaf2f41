#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bthowen/bit_vector.hpp"
#include "bthowen/rng.hpp"

namespace bthowen {

/// H3 universal hash family: k functions from n-bit inputs to m-bit
/// addresses. Function `which` holds n random m-bit parameters and hashes by
/// XOR-folding the parameters selected by the set bits of the input; no
/// arithmetic is involved. One family is shared by every filter in a model.
class H3HashFamily {
 public:
  H3HashFamily() = default;

  H3HashFamily(uint32_t input_bits, uint32_t output_bits, uint32_t function_count,
               std::vector<uint32_t> parameters)
      : input_bits_(input_bits),
        output_bits_(output_bits),
        function_count_(function_count) {
    check_shape(input_bits, output_bits, function_count);
    if (parameters.size() != static_cast<size_t>(input_bits) * function_count) {
      throw std::invalid_argument("H3HashFamily: parameter count mismatch");
    }
    const uint32_t limit = uint32_t{1} << output_bits;
    for (uint32_t p : parameters) {
      if (p >= limit) throw std::invalid_argument("H3HashFamily: parameter exceeds 2^m");
    }
    parameters_ = std::move(parameters);
  }

  /// Draws n*k parameters uniformly from [0, 2^m). Same seed, same family.
  static H3HashFamily sample(Rng& rng, uint32_t input_bits, uint32_t output_bits,
                             uint32_t function_count) {
    check_shape(input_bits, output_bits, function_count);
    std::vector<uint32_t> parameters(static_cast<size_t>(input_bits) * function_count);
    const uint64_t bound = uint64_t{1} << output_bits;
    for (auto& p : parameters) p = static_cast<uint32_t>(rng.next_below(bound));
    return H3HashFamily(input_bits, output_bits, function_count, std::move(parameters));
  }

  /// Hashes the n bits starting at bit_offset with function `which`.
  uint32_t hash_window(uint32_t which, const BitVector& bits, size_t bit_offset) const {
    if (which >= function_count_) throw std::out_of_range("H3HashFamily: function index out of range");
    const uint32_t* params = &parameters_[static_cast<size_t>(which) * input_bits_];
    uint32_t acc = 0;
    uint32_t done = 0;
    while (done < input_bits_) {
      const uint32_t chunk = std::min<uint32_t>(64, input_bits_ - done);
      uint64_t w = bits.word_window(bit_offset + done, chunk);
      while (w != 0) {
        acc ^= params[done + std::countr_zero(w)];
        w &= w - 1;
      }
      done += chunk;
    }
    return acc;
  }

  uint32_t hash(uint32_t which, const BitVector& x) const {
    if (x.size() != input_bits_) throw std::invalid_argument("H3HashFamily::hash: input has wrong bit count");
    return hash_window(which, x, 0);
  }

  uint32_t input_bits() const { return input_bits_; }
  uint32_t output_bits() const { return output_bits_; }
  uint32_t function_count() const { return function_count_; }
  const std::vector<uint32_t>& parameters() const { return parameters_; }
  uint32_t parameter(uint32_t which, uint32_t bit) const {
    return parameters_[static_cast<size_t>(which) * input_bits_ + bit];
  }

 private:
  static void check_shape(uint32_t input_bits, uint32_t output_bits, uint32_t function_count) {
    if (input_bits == 0) throw std::invalid_argument("H3HashFamily: input_bits must be >= 1");
    if (output_bits == 0 || output_bits > 30) {
      throw std::invalid_argument("H3HashFamily: output_bits must lie in [1, 30]");
    }
    if (function_count == 0) throw std::invalid_argument("H3HashFamily: need at least one function");
  }

  uint32_t input_bits_ = 0;
  uint32_t output_bits_ = 0;
  uint32_t function_count_ = 0;
  std::vector<uint32_t> parameters_;
};

}  // namespace bthowen
