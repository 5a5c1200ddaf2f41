#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace bthowen {

/// Fixed-size packed bit vector. Bits beyond size() are kept zero so that
/// word-level reads and equality comparisons are canonical.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(size_t bit_count)
      : size_(bit_count), words_((bit_count + 63) / 64, 0) {}

  size_t size() const { return size_; }

  bool get(size_t index) const {
    return (words_[index >> 6] >> (index & 63)) & 1u;
  }

  void set(size_t index, bool value = true) {
    if (index >= size_) throw std::out_of_range("BitVector::set: index out of range");
    const uint64_t mask = uint64_t{1} << (index & 63);
    if (value) {
      words_[index >> 6] |= mask;
    } else {
      words_[index >> 6] &= ~mask;
    }
  }

  void clear_all() { words_.assign(words_.size(), 0); }

  /// Bits [offset, offset + count) packed into one word, count in [1, 64].
  uint64_t word_window(size_t offset, size_t count) const {
    const size_t w = offset >> 6;
    const size_t s = offset & 63;
    uint64_t v = words_[w] >> s;
    if (s != 0 && w + 1 < words_.size()) v |= words_[w + 1] << (64 - s);
    if (count < 64) v &= (uint64_t{1} << count) - 1;
    return v;
  }

  size_t popcount() const {
    size_t total = 0;
    for (uint64_t w : words_) total += static_cast<size_t>(__builtin_popcountll(w));
    return total;
  }

  const std::vector<uint64_t>& words() const { return words_; }

  bool operator==(const BitVector&) const = default;

 private:
  size_t size_ = 0;
  std::vector<uint64_t> words_;
};

}  // namespace bthowen
