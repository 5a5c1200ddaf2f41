#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bthowen/bit_vector.hpp"
#include "bthowen/dataset.hpp"
#include "bthowen/encoding.hpp"
#include "bthowen/filters.hpp"
#include "bthowen/hashing.hpp"
#include "bthowen/rng.hpp"

namespace bthowen {

struct ModelConfig {
  uint32_t feature_count = 0;
  uint32_t class_count = 0;
  uint32_t bits_per_input = 0;    // thermometer thresholds per feature
  uint32_t inputs_per_filter = 0; // bits consumed by each filter
  uint32_t entries = 0;           // counters per filter, power of two
  uint32_t hashes = 0;            // hash functions per filter
  uint64_t seed = 0;

  void validate() const {
    if (feature_count == 0) throw std::invalid_argument("config: feature_count must be positive");
    if (class_count < 2) throw std::invalid_argument("config: need at least two classes");
    if (bits_per_input == 0) throw std::invalid_argument("config: bits_per_input must be positive");
    if (inputs_per_filter == 0) {
      throw std::invalid_argument("config: inputs_per_filter must be positive");
    }
    if (entries < 2 || !std::has_single_bit(entries)) {
      throw std::invalid_argument("config: entries must be a power of two >= 2");
    }
    if (hashes == 0) throw std::invalid_argument("config: hashes must be positive");
  }

  uint64_t encoded_bits() const {
    return static_cast<uint64_t>(feature_count) * bits_per_input;
  }
  uint64_t padded_bits() const {
    const uint64_t n = inputs_per_filter;
    return (encoded_bits() + n - 1) / n * n;
  }
  uint32_t filters_per_discriminator() const {
    return static_cast<uint32_t>(padded_bits() / inputs_per_filter);
  }
  uint32_t address_bits() const { return static_cast<uint32_t>(std::countr_zero(entries)); }
};

struct BleachSelection {
  uint32_t b = 1;
  double accuracy = 0.0;
};

/// Multi-discriminator weightless classifier: one bank of counting Bloom
/// filters per class, trained in a single pass and read out by thresholded
/// popcount responses.
class BthowenModel {
 public:
  explicit BthowenModel(const ModelConfig& config) : config_(config) {
    config_.validate();
    Rng rng(config_.seed);
    permutation_.resize(config_.padded_bits());
    std::iota(permutation_.begin(), permutation_.end(), uint32_t{0});
    rng.shuffle(permutation_);
    family_ = H3HashFamily::sample(rng, config_.inputs_per_filter, config_.address_bits(),
                                   config_.hashes);
    filters_.assign(config_.class_count,
                    std::vector<CountingBloomFilter>(
                        config_.filters_per_discriminator(),
                        CountingBloomFilter(config_.address_bits())));
  }

  /// Reassembles a model from stored parts. The input permutation is
  /// re-derived from the seed; hash parameters come from the caller.
  BthowenModel(const ModelConfig& config, ThermometerEncoder encoder,
               std::vector<uint32_t> hash_params,
               std::vector<std::vector<CountingBloomFilter>> filters,
               std::vector<std::vector<BinaryBloomFilter>> binary_filters, uint32_t selected_b,
               std::vector<std::string> label_names)
      : config_(config),
        encoder_(std::move(encoder)),
        selected_b_(selected_b),
        label_names_(std::move(label_names)) {
    config_.validate();
    Rng rng(config_.seed);
    permutation_.resize(config_.padded_bits());
    std::iota(permutation_.begin(), permutation_.end(), uint32_t{0});
    rng.shuffle(permutation_);
    family_ = H3HashFamily(config_.inputs_per_filter, config_.address_bits(), config_.hashes,
                           std::move(hash_params));
    binarized_ = !binary_filters.empty();
    filters_ = std::move(filters);
    binary_filters_ = std::move(binary_filters);
    check_bank_shape();
  }

  const ModelConfig& config() const { return config_; }
  const ThermometerEncoder& encoder() const { return encoder_; }
  const H3HashFamily& family() const { return family_; }
  const std::vector<uint32_t>& permutation() const { return permutation_; }
  bool binarized() const { return binarized_; }
  uint32_t selected_bleach() const { return selected_b_; }
  void set_selected_bleach(uint32_t b) { selected_b_ = b; }
  const std::vector<std::string>& label_names() const { return label_names_; }
  void set_label_names(std::vector<std::string> names) { label_names_ = std::move(names); }

  const CountingBloomFilter& filter(uint32_t cls, uint32_t index) const {
    return filters_.at(cls).at(index);
  }
  const BinaryBloomFilter& binary_filter(uint32_t cls, uint32_t index) const {
    return binary_filters_.at(cls).at(index);
  }

  void fit_encoder(const LabeledDataset& train) {
    if (train.feature_count != config_.feature_count) {
      throw std::invalid_argument("fit_encoder: dataset feature count does not match config");
    }
    encoder_ = ThermometerEncoder::fit(train.features, train.size(), train.feature_count,
                                       config_.bits_per_input);
  }
  void set_encoder(ThermometerEncoder encoder) {
    if (encoder.feature_count() != config_.feature_count ||
        encoder.bits_per_input() != config_.bits_per_input) {
      throw std::invalid_argument("set_encoder: encoder shape does not match config");
    }
    encoder_ = std::move(encoder);
  }

  /// Hash addresses for one sample: hashes * filters_per_discriminator
  /// values, grouped by filter. Every discriminator reads the same list.
  std::vector<uint32_t> filter_addresses(std::span<const double> sample) const {
    require_encoder();
    if (sample.size() != config_.feature_count) {
      throw std::invalid_argument("sample feature count does not match config");
    }
    BitVector raw(config_.padded_bits());
    encoder_.encode(sample.data(), sample.size(), raw);
    BitVector mapped(config_.padded_bits());
    for (size_t i = 0; i < permutation_.size(); ++i) {
      if (raw.get(permutation_[i])) mapped.set(i, true);
    }

    const uint32_t filter_count = config_.filters_per_discriminator();
    const uint32_t k = config_.hashes;
    std::vector<uint32_t> addresses(static_cast<size_t>(filter_count) * k);
    for (uint32_t j = 0; j < filter_count; ++j) {
      const size_t offset = static_cast<size_t>(j) * config_.inputs_per_filter;
      for (uint32_t h = 0; h < k; ++h) {
        addresses[static_cast<size_t>(j) * k + h] = family_.hash_window(h, mapped, offset);
      }
    }
    return addresses;
  }

  void train_sample(std::span<const double> sample, uint32_t label) {
    if (binarized_) throw std::logic_error("cannot train a binarized model");
    if (label >= config_.class_count) throw std::out_of_range("label out of range");
    train_addresses(filter_addresses(sample), label);
  }

  void train_addresses(const std::vector<uint32_t>& addresses, uint32_t label) {
    if (binarized_) throw std::logic_error("cannot train a binarized model");
    auto& bank = filters_.at(label);
    const uint32_t k = config_.hashes;
    for (size_t j = 0; j < bank.size(); ++j) {
      bank[j].add_at({addresses.data() + j * k, k});
    }
  }

  /// Fits the encoder if needed, then trains on every sample once.
  void train(const LabeledDataset& train_set) {
    if (!encoder_.fitted()) fit_encoder(train_set);
    for (size_t i = 0; i < train_set.size(); ++i) {
      train_sample(train_set.sample(i), train_set.labels[i]);
    }
    if (label_names_.empty()) label_names_ = train_set.label_names;
  }

  /// Per-class counts of filters answering "seen" at bleach threshold b.
  std::vector<uint32_t> response(std::span<const double> sample, uint32_t b = 0) const {
    return response_addresses(filter_addresses(sample), b);
  }

  std::vector<uint32_t> response_addresses(const std::vector<uint32_t>& addresses,
                                           uint32_t b = 0) const {
    const uint32_t eff = effective_bleach(b);
    const uint32_t k = config_.hashes;
    std::vector<uint32_t> scores(config_.class_count, 0);
    for (uint32_t c = 0; c < config_.class_count; ++c) {
      uint32_t score = 0;
      if (binarized_) {
        const auto& bank = binary_filters_[c];
        for (size_t j = 0; j < bank.size(); ++j) {
          score += bank[j].query_at({addresses.data() + j * k, k}) ? 1 : 0;
        }
      } else {
        const auto& bank = filters_[c];
        for (size_t j = 0; j < bank.size(); ++j) {
          score += bank[j].query_at({addresses.data() + j * k, k}, eff) ? 1 : 0;
        }
      }
      scores[c] = score;
    }
    return scores;
  }

  /// Argmax response; ties resolve to the lowest class index.
  uint32_t predict(std::span<const double> sample, uint32_t b = 0) const {
    const auto scores = response(sample, b);
    return static_cast<uint32_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  }

  double evaluate(const LabeledDataset& data, uint32_t b = 0) const {
    if (data.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
    size_t correct = 0;
    for (size_t i = 0; i < data.size(); ++i) {
      if (predict(data.sample(i), b) == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
  }

  uint32_t max_counter() const {
    if (binarized_) throw std::logic_error("binarized model has no counters");
    uint32_t best = 0;
    for (const auto& bank : filters_) {
      for (const auto& f : bank) best = std::max(best, f.max_counter());
    }
    return best;
  }

  /// Binary search over bleach values on a held-out set, keeping the
  /// best accuracy seen at any probed value. Stores and returns the pick.
  BleachSelection select_bleach(const LabeledDataset& validation) {
    if (binarized_) throw std::logic_error("binarized model has a fixed threshold");
    if (validation.size() == 0) throw std::invalid_argument("select_bleach: empty validation set");
    require_encoder();

    // Min counter per (sample, class, filter): the largest b at which that
    // filter still answers "seen". Lets every probe run in O(V*M*N).
    const uint32_t filter_count = config_.filters_per_discriminator();
    const uint32_t classes = config_.class_count;
    const size_t stride = static_cast<size_t>(classes) * filter_count;
    std::vector<uint32_t> mins(validation.size() * stride);
    const uint32_t k = config_.hashes;
    for (size_t i = 0; i < validation.size(); ++i) {
      const auto addresses = filter_addresses(validation.sample(i));
      for (uint32_t c = 0; c < classes; ++c) {
        const auto& bank = filters_[c];
        for (uint32_t j = 0; j < filter_count; ++j) {
          mins[i * stride + static_cast<size_t>(c) * filter_count + j] =
              bank[j].min_at({addresses.data() + static_cast<size_t>(j) * k, k});
        }
      }
    }

    std::map<uint32_t, double> cache;
    const auto accuracy_at = [&](uint32_t b) {
      auto it = cache.find(b);
      if (it != cache.end()) return it->second;
      size_t correct = 0;
      for (size_t i = 0; i < validation.size(); ++i) {
        uint32_t best_class = 0;
        uint32_t best_score = 0;
        bool first = true;
        for (uint32_t c = 0; c < classes; ++c) {
          uint32_t score = 0;
          const uint32_t* row = mins.data() + i * stride + static_cast<size_t>(c) * filter_count;
          for (uint32_t j = 0; j < filter_count; ++j) {
            score += row[j] >= b ? 1 : 0;
          }
          if (first || score > best_score) {
            best_class = c;
            best_score = score;
            first = false;
          }
        }
        if (best_class == validation.labels[i]) ++correct;
      }
      const double acc = static_cast<double>(correct) / static_cast<double>(validation.size());
      cache.emplace(b, acc);
      return acc;
    };

    BleachSelection best{1, accuracy_at(1)};
    const auto probe = [&](uint32_t b) {
      const double acc = accuracy_at(b);
      if (acc > best.accuracy) best = {b, acc};
      return acc;
    };

    uint32_t lo = 1;
    uint32_t hi = std::max(max_counter(), uint32_t{1});
    while (lo < hi) {
      const uint32_t mid = lo + (hi - lo) / 2;
      const double here = probe(mid);
      const double next = probe(mid + 1);
      if (next > here) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    probe(lo);

    selected_b_ = best.b;
    return best;
  }

  /// Snapshot as a plain Bloom filter model: counters collapse to
  /// counter >= b, and queries stop taking a threshold.
  BthowenModel binarized(uint32_t b) const {
    if (binarized_) throw std::logic_error("model is already binarized");
    if (b == 0) throw std::invalid_argument("binarized: b must be at least 1");
    std::vector<std::vector<BinaryBloomFilter>> banks;
    banks.reserve(filters_.size());
    for (const auto& bank : filters_) {
      std::vector<BinaryBloomFilter> converted;
      converted.reserve(bank.size());
      for (const auto& f : bank) converted.push_back(f.binarize(b));
      banks.push_back(std::move(converted));
    }
    return BthowenModel(config_, encoder_, family_.parameters(), {}, std::move(banks), b,
                        label_names_);
  }

 private:
  void require_encoder() const {
    if (!encoder_.fitted()) throw std::logic_error("encoder has not been fitted");
  }

  uint32_t effective_bleach(uint32_t b) const {
    if (binarized_) return 1;
    if (b != 0) return b;
    return selected_b_ != 0 ? selected_b_ : 1;
  }

  void check_bank_shape() const {
    const size_t bank_count = binarized_ ? binary_filters_.size() : filters_.size();
    if (bank_count != config_.class_count) {
      throw std::invalid_argument("model parts: wrong discriminator count");
    }
    const uint32_t filter_count = config_.filters_per_discriminator();
    if (binarized_) {
      for (const auto& bank : binary_filters_) {
        if (bank.size() != filter_count) throw std::invalid_argument("model parts: wrong bank size");
        for (const auto& f : bank) {
          if (f.entry_count() != config_.entries) {
            throw std::invalid_argument("model parts: wrong filter size");
          }
        }
      }
    } else {
      for (const auto& bank : filters_) {
        if (bank.size() != filter_count) throw std::invalid_argument("model parts: wrong bank size");
        for (const auto& f : bank) {
          if (f.entry_count() != config_.entries) {
            throw std::invalid_argument("model parts: wrong filter size");
          }
        }
      }
    }
  }

  ModelConfig config_;
  ThermometerEncoder encoder_;
  std::vector<uint32_t> permutation_;
  H3HashFamily family_;
  std::vector<std::vector<CountingBloomFilter>> filters_;
  std::vector<std::vector<BinaryBloomFilter>> binary_filters_;
  bool binarized_ = false;
  uint32_t selected_b_ = 0;
  std::vector<std::string> label_names_;
};

}  // namespace bthowen
