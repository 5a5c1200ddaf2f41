#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bthowen/model.hpp"

namespace bthowen {

inline constexpr char kModelMagic[4] = {'B', 'T', 'H', 'W'};
inline constexpr uint32_t kModelFormatVersion = 1;

/// Deployable payload: one bit per filter entry across every discriminator.
inline uint64_t payload_bits(const ModelConfig& config) {
  return static_cast<uint64_t>(config.class_count) * config.filters_per_discriminator() *
         config.entries;
}

inline double payload_kib(const ModelConfig& config) {
  return static_cast<double>(payload_bits(config)) / 8192.0;
}

inline double round_significant(double x, int digits) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(x))));
  const double scale = std::pow(10.0, digits - 1 - exponent);
  return std::round(x * scale) / scale;
}

/// Formats with exactly `digits` significant figures (fixed notation).
inline std::string format_significant(double x, int digits) {
  if (x == 0.0) return "0";
  const double rounded = round_significant(x, digits);
  const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(rounded))));
  const int decimals = std::max(0, digits - 1 - exponent);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  return buf;
}

namespace detail {

inline void put_u32(std::ostream& out, uint32_t v) {
  unsigned char raw[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(raw), 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
  put_u32(out, static_cast<uint32_t>(v));
  put_u32(out, static_cast<uint32_t>(v >> 32));
}

inline void put_double(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(out, bits);
}

inline uint32_t take_u32(std::istream& in, const std::string& context) {
  unsigned char raw[4];
  in.read(reinterpret_cast<char*>(raw), 4);
  if (!in) throw std::runtime_error("truncated model file: " + context);
  return uint32_t{raw[0]} | (uint32_t{raw[1]} << 8) | (uint32_t{raw[2]} << 16) |
         (uint32_t{raw[3]} << 24);
}

inline uint64_t take_u64(std::istream& in, const std::string& context) {
  const uint64_t lo = take_u32(in, context);
  const uint64_t hi = take_u32(in, context);
  return lo | (hi << 32);
}

inline double take_double(std::istream& in, const std::string& context) {
  const uint64_t bits = take_u64(in, context);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace detail

inline void save_model(const BthowenModel& model, const std::string& path) {
  if (!model.encoder().fitted()) {
    throw std::logic_error("save_model: encoder has not been fitted");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");

  const ModelConfig& c = model.config();
  out.write(kModelMagic, 4);
  detail::put_u32(out, kModelFormatVersion);
  detail::put_u32(out, c.feature_count);
  detail::put_u32(out, c.class_count);
  detail::put_u32(out, c.bits_per_input);
  detail::put_u32(out, c.inputs_per_filter);
  detail::put_u32(out, c.entries);
  detail::put_u32(out, c.hashes);
  detail::put_u64(out, c.seed);
  out.put(model.binarized() ? '\x01' : '\x00');

  for (double t : model.encoder().thresholds()) detail::put_double(out, t);
  for (uint32_t h = 0; h < c.hashes; ++h) {
    for (uint32_t bit = 0; bit < c.inputs_per_filter; ++bit) {
      detail::put_u32(out, model.family().parameter(h, bit));
    }
  }

  const uint32_t filter_count = c.filters_per_discriminator();
  if (model.binarized()) {
    const size_t bytes_per_filter = (static_cast<size_t>(c.entries) + 7) / 8;
    std::vector<unsigned char> packed(bytes_per_filter);
    for (uint32_t cls = 0; cls < c.class_count; ++cls) {
      for (uint32_t j = 0; j < filter_count; ++j) {
        const BitVector& bits = model.binary_filter(cls, j).bits();
        std::fill(packed.begin(), packed.end(), 0);
        for (uint32_t e = 0; e < c.entries; ++e) {
          if (bits.get(e)) packed[e / 8] |= static_cast<unsigned char>(1u << (e % 8));
        }
        out.write(reinterpret_cast<const char*>(packed.data()),
                  static_cast<std::streamsize>(packed.size()));
      }
    }
  } else {
    for (uint32_t cls = 0; cls < c.class_count; ++cls) {
      for (uint32_t j = 0; j < filter_count; ++j) {
        for (uint32_t v : model.filter(cls, j).counters()) detail::put_u32(out, v);
      }
    }
  }

  detail::put_u32(out, model.selected_bleach());
  detail::put_u32(out, static_cast<uint32_t>(model.label_names().size()));
  for (const auto& name : model.label_names()) {
    detail::put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline BthowenModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0) {
    throw std::runtime_error(path + ": not a model file");
  }
  const uint32_t version = detail::take_u32(in, "version");
  if (version != kModelFormatVersion) {
    throw std::runtime_error(path + ": unsupported format version " + std::to_string(version));
  }

  ModelConfig c;
  c.feature_count = detail::take_u32(in, "feature_count");
  c.class_count = detail::take_u32(in, "class_count");
  c.bits_per_input = detail::take_u32(in, "bits_per_input");
  c.inputs_per_filter = detail::take_u32(in, "inputs_per_filter");
  c.entries = detail::take_u32(in, "entries");
  c.hashes = detail::take_u32(in, "hashes");
  c.seed = detail::take_u64(in, "seed");
  c.validate();

  const int state = in.get();
  if (state != 0 && state != 1) throw std::runtime_error(path + ": bad state byte");
  const bool binarized = state == 1;

  std::vector<double> thresholds(static_cast<size_t>(c.feature_count) * c.bits_per_input);
  for (auto& t : thresholds) t = detail::take_double(in, "thresholds");
  ThermometerEncoder encoder(c.feature_count, c.bits_per_input, std::move(thresholds));

  std::vector<uint32_t> params(static_cast<size_t>(c.hashes) * c.inputs_per_filter);
  for (auto& p : params) p = detail::take_u32(in, "hash parameters");

  const uint32_t filter_count = c.filters_per_discriminator();
  std::vector<std::vector<CountingBloomFilter>> filters;
  std::vector<std::vector<BinaryBloomFilter>> binary_filters;
  if (binarized) {
    const size_t bytes_per_filter = (static_cast<size_t>(c.entries) + 7) / 8;
    std::vector<unsigned char> packed(bytes_per_filter);
    for (uint32_t cls = 0; cls < c.class_count; ++cls) {
      std::vector<BinaryBloomFilter> bank;
      bank.reserve(filter_count);
      for (uint32_t j = 0; j < filter_count; ++j) {
        in.read(reinterpret_cast<char*>(packed.data()),
                static_cast<std::streamsize>(packed.size()));
        if (!in) throw std::runtime_error(path + ": truncated filter data");
        BitVector bits(c.entries);
        for (uint32_t e = 0; e < c.entries; ++e) {
          if (packed[e / 8] & (1u << (e % 8))) bits.set(e);
        }
        bank.emplace_back(std::move(bits));
      }
      binary_filters.push_back(std::move(bank));
    }
  } else {
    for (uint32_t cls = 0; cls < c.class_count; ++cls) {
      std::vector<CountingBloomFilter> bank;
      bank.reserve(filter_count);
      for (uint32_t j = 0; j < filter_count; ++j) {
        std::vector<uint32_t> counters(c.entries);
        for (auto& v : counters) v = detail::take_u32(in, "filter counters");
        bank.emplace_back(std::move(counters));
      }
      filters.push_back(std::move(bank));
    }
  }

  const uint32_t selected_b = detail::take_u32(in, "selected bleach");
  const uint32_t name_count = detail::take_u32(in, "label count");
  std::vector<std::string> names;
  names.reserve(name_count);
  for (uint32_t i = 0; i < name_count; ++i) {
    const uint32_t len = detail::take_u32(in, "label length");
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw std::runtime_error(path + ": truncated label names");
    names.push_back(std::move(name));
  }

  return BthowenModel(c, std::move(encoder), std::move(params), std::move(filters),
                      std::move(binary_filters), selected_b, std::move(names));
}

/// Human-readable key=value summary of a stored model.
inline std::string inspect_model(const std::string& path) {
  const BthowenModel model = load_model(path);
  const ModelConfig& c = model.config();

  std::ifstream in(path, std::ios::binary | std::ios::ate);
  const uint64_t file_bytes = in ? static_cast<uint64_t>(in.tellg()) : 0;
  const uint64_t filter_bytes =
      model.binarized()
          ? static_cast<uint64_t>(c.class_count) * c.filters_per_discriminator() *
                ((c.entries + 7) / 8)
          : static_cast<uint64_t>(c.class_count) * c.filters_per_discriminator() * c.entries * 4;

  std::ostringstream out;
  out << "format_version=" << kModelFormatVersion << '\n';
  out << "state=" << (model.binarized() ? "binarized" : "counting") << '\n';
  out << "classes=" << c.class_count << '\n';
  out << "features=" << c.feature_count << '\n';
  out << "bits_per_input=" << c.bits_per_input << '\n';
  out << "inputs_per_filter=" << c.inputs_per_filter << '\n';
  out << "filters_per_discriminator=" << c.filters_per_discriminator() << '\n';
  out << "entries_per_filter=" << c.entries << '\n';
  out << "hashes=" << c.hashes << '\n';
  out << "seed=" << c.seed << '\n';
  if (model.selected_bleach() != 0) {
    out << "b=" << model.selected_bleach() << '\n';
  } else {
    out << "b=unset\n";
  }
  if (!model.binarized()) out << "max_counter=" << model.max_counter() << '\n';
  out << "payload_bits=" << payload_bits(c) << '\n';
  out << "payload_kib=" << format_significant(payload_kib(c), 3) << '\n';
  out << "file_bytes=" << file_bytes << '\n';
  out << "metadata_overhead_bytes=" << (file_bytes > filter_bytes ? file_bytes - filter_bytes : 0)
      << '\n';
  if (!model.label_names().empty()) {
    out << "labels=";
    for (size_t i = 0; i < model.label_names().size(); ++i) {
      if (i) out << ',';
      out << model.label_names()[i];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace bthowen
