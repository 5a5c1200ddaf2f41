#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bthowen/bit_vector.hpp"
#include "bthowen/hashing.hpp"

namespace bthowen {

class BinaryBloomFilter;

/// Counting Bloom filter over a single array of 2^m counters addressed by
/// all k hash functions of a shared H3 family. Insertions use the
/// min-increment rule: only the addressed counters equal to the current
/// minimum are bumped, so the minimum rises by exactly 1 per insertion and
/// false negatives remain impossible. Counters are never decremented.
class CountingBloomFilter {
 public:
  CountingBloomFilter() = default;

  explicit CountingBloomFilter(uint32_t address_bits)
      : counters_(size_t{1} << check_bits(address_bits), 0) {}

  /// Adopts an existing counter array; size must be a power of two.
  explicit CountingBloomFilter(std::vector<uint32_t> counters)
      : counters_(std::move(counters)) {
    if (counters_.empty() || (counters_.size() & (counters_.size() - 1)) != 0) {
      throw std::invalid_argument("CountingBloomFilter: counter count must be a power of two");
    }
  }

  size_t entry_count() const { return counters_.size(); }

  uint32_t min_at(std::span<const uint32_t> addresses) const {
    uint32_t v = counters_[addresses[0]];
    for (size_t i = 1; i < addresses.size(); ++i) v = std::min(v, counters_[addresses[i]]);
    return v;
  }

  /// Min-increment insertion on precomputed addresses. Duplicate addresses
  /// are harmless: once bumped past the old minimum a counter no longer
  /// matches it.
  void add_at(std::span<const uint32_t> addresses) {
    const uint32_t v = min_at(addresses);
    if (v == UINT32_MAX) throw std::overflow_error("CountingBloomFilter: counter overflow");
    for (uint32_t a : addresses) {
      if (counters_[a] == v) counters_[a] = v + 1;
    }
  }

  /// True iff the smallest addressed counter is at least b.
  bool query_at(std::span<const uint32_t> addresses, uint32_t b) const {
    if (b == 0) throw std::invalid_argument("CountingBloomFilter::query: b must be >= 1");
    return min_at(addresses) >= b;
  }

  void add(const H3HashFamily& family, const BitVector& x) {
    auto addresses = hash_all(family, x);
    add_at(addresses);
  }

  bool query(const H3HashFamily& family, const BitVector& x, uint32_t b) const {
    auto addresses = hash_all(family, x);
    return query_at(addresses, b);
  }

  uint32_t max_counter() const {
    uint32_t v = 0;
    for (uint32_t c : counters_) v = std::max(v, c);
    return v;
  }

  BinaryBloomFilter binarize(uint32_t b) const;

  const std::vector<uint32_t>& counters() const { return counters_; }

 private:
  static uint32_t check_bits(uint32_t address_bits) {
    if (address_bits == 0 || address_bits > 30) {
      throw std::invalid_argument("CountingBloomFilter: address_bits must lie in [1, 30]");
    }
    return address_bits;
  }

  std::vector<uint32_t> hash_all(const H3HashFamily& family, const BitVector& x) const {
    std::vector<uint32_t> addresses(family.function_count());
    for (uint32_t i = 0; i < family.function_count(); ++i) addresses[i] = family.hash(i, x);
    return addresses;
  }

  std::vector<uint32_t> counters_;
};

/// Plain Bloom filter produced by thresholding a counting filter; immutable.
/// A query AND-reduces the k addressed bits.
class BinaryBloomFilter {
 public:
  BinaryBloomFilter() = default;

  explicit BinaryBloomFilter(BitVector bits) : bits_(std::move(bits)) {
    const size_t n = bits_.size();
    if (n == 0 || (n & (n - 1)) != 0) {
      throw std::invalid_argument("BinaryBloomFilter: entry count must be a power of two");
    }
  }

  size_t entry_count() const { return bits_.size(); }

  bool query_at(std::span<const uint32_t> addresses) const {
    for (uint32_t a : addresses) {
      if (!bits_.get(a)) return false;
    }
    return true;
  }

  bool query(const H3HashFamily& family, const BitVector& x) const {
    for (uint32_t i = 0; i < family.function_count(); ++i) {
      if (!bits_.get(family.hash(i, x))) return false;
    }
    return true;
  }

  const BitVector& bits() const { return bits_; }

 private:
  BitVector bits_;
};

inline BinaryBloomFilter CountingBloomFilter::binarize(uint32_t b) const {
  if (b == 0) throw std::invalid_argument("CountingBloomFilter::binarize: b must be >= 1");
  BitVector bits(counters_.size());
  for (size_t i = 0; i < counters_.size(); ++i) {
    if (counters_[i] >= b) bits.set(i);
  }
  return BinaryBloomFilter(std::move(bits));
}

}  // namespace bthowen
