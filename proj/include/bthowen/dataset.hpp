#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bthowen/rng.hpp"

namespace bthowen {

/// Feature rows without labels (prediction input).
struct FeatureMatrix {
  std::vector<double> features;  // row-major
  size_t feature_count = 0;
  size_t size() const { return feature_count == 0 ? 0 : features.size() / feature_count; }
  std::span<const double> row(size_t i) const {
    return {features.data() + i * feature_count, feature_count};
  }
};

struct LabeledDataset {
  std::vector<double> features;  // row-major, size() x feature_count
  std::vector<uint32_t> labels;  // dense class indices
  size_t feature_count = 0;
  uint32_t class_count = 0;
  std::vector<std::string> label_names;  // dense index -> source label; may be empty

  size_t size() const { return labels.size(); }
  std::span<const double> sample(size_t i) const {
    return {features.data() + i * feature_count, feature_count};
  }
};

namespace detail {

inline uint32_t read_be_u32(std::istream& in, const char* context) {
  unsigned char raw[4];
  in.read(reinterpret_cast<char*>(raw), 4);
  if (!in) throw std::runtime_error(std::string("truncated IDX header: ") + context);
  return (uint32_t{raw[0]} << 24) | (uint32_t{raw[1]} << 16) | (uint32_t{raw[2]} << 8) | raw[3];
}

inline std::vector<std::string> split_fields(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  if (delimiter == ' ') {
    // whitespace mode: runs of blanks count as one separator
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) fields.push_back(tok);
    return fields;
  }
  std::string current;
  for (char c : line) {
    if (c == delimiter) {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

inline double parse_number(const std::string& text, size_t line_no) {
  size_t consumed = 0;
  double v;
  try {
    v = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse '" + text +
                             "' as a number");
  }
  while (consumed < text.size() && std::isspace(static_cast<unsigned char>(text[consumed]))) ++consumed;
  if (consumed != text.size() || !std::isfinite(v)) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": cannot parse '" + text +
                             "' as a number");
  }
  return v;
}

}  // namespace detail

/// Loads an MNIST-style IDX image/label pair. Images become rows of
/// rows*cols real features in [0, 255].
inline LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("cannot open " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("cannot open " + labels_path);

  const uint32_t image_magic = detail::read_be_u32(images, "image magic");
  if (image_magic != 2051) {
    throw std::runtime_error(images_path + ": bad image magic " + std::to_string(image_magic));
  }
  const uint32_t image_count = detail::read_be_u32(images, "image count");
  const uint32_t rows = detail::read_be_u32(images, "rows");
  const uint32_t cols = detail::read_be_u32(images, "cols");

  const uint32_t label_magic = detail::read_be_u32(labels, "label magic");
  if (label_magic != 2049) {
    throw std::runtime_error(labels_path + ": bad label magic " + std::to_string(label_magic));
  }
  const uint32_t label_count = detail::read_be_u32(labels, "label count");
  if (label_count != image_count) {
    throw std::runtime_error("IDX pair mismatch: " + std::to_string(image_count) + " images vs " +
                             std::to_string(label_count) + " labels");
  }

  LabeledDataset ds;
  ds.feature_count = static_cast<size_t>(rows) * cols;
  ds.features.resize(static_cast<size_t>(image_count) * ds.feature_count);
  ds.labels.resize(image_count);

  std::vector<unsigned char> buffer(ds.feature_count);
  for (uint32_t i = 0; i < image_count; ++i) {
    images.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (!images) throw std::runtime_error(images_path + ": truncated image data");
    for (size_t j = 0; j < buffer.size(); ++j) {
      ds.features[i * ds.feature_count + j] = static_cast<double>(buffer[j]);
    }
  }
  std::vector<unsigned char> raw_labels(image_count);
  labels.read(reinterpret_cast<char*>(raw_labels.data()), image_count);
  if (!labels) throw std::runtime_error(labels_path + ": truncated label data");

  uint32_t max_label = 0;
  for (uint32_t i = 0; i < image_count; ++i) {
    ds.labels[i] = raw_labels[i];
    max_label = std::max<uint32_t>(max_label, raw_labels[i]);
  }
  ds.class_count = max_label + 1;
  for (uint32_t c = 0; c < ds.class_count; ++c) ds.label_names.push_back(std::to_string(c));
  return ds;
}

/// Loads IDX images only (no labels), for prediction input.
inline FeatureMatrix load_idx_images(const std::string& images_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("cannot open " + images_path);
  const uint32_t magic = detail::read_be_u32(images, "image magic");
  if (magic != 2051) {
    throw std::runtime_error(images_path + ": bad image magic " + std::to_string(magic));
  }
  const uint32_t count = detail::read_be_u32(images, "image count");
  const uint32_t rows = detail::read_be_u32(images, "rows");
  const uint32_t cols = detail::read_be_u32(images, "cols");
  FeatureMatrix m;
  m.feature_count = static_cast<size_t>(rows) * cols;
  m.features.resize(static_cast<size_t>(count) * m.feature_count);
  std::vector<unsigned char> buffer(m.feature_count);
  for (uint32_t i = 0; i < count; ++i) {
    images.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(buffer.size()));
    if (!images) throw std::runtime_error(images_path + ": truncated image data");
    for (size_t j = 0; j < buffer.size(); ++j) {
      m.features[i * m.feature_count + j] = static_cast<double>(buffer[j]);
    }
  }
  return m;
}

/// Loads a delimited text file with one labeled sample per row.
/// label_column indexes the label field; negative counts from the end
/// (-1 = last). When fixed_labels is given, rows must use those labels;
/// otherwise classes are numbered in first-appearance order.
inline LabeledDataset load_delimited(const std::string& path, char delimiter, int label_column,
                                     bool has_header = false,
                                     const std::vector<std::string>* fixed_labels = nullptr) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  LabeledDataset ds;
  if (fixed_labels) ds.label_names = *fixed_labels;

  std::string line;
  size_t line_no = 0;
  size_t field_count = 0;
  bool skipped_header = !has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto fields = detail::split_fields(line, delimiter);
    if (field_count == 0) {
      field_count = fields.size();
      if (field_count < 2) {
        throw std::runtime_error(path + ": need at least one feature and a label column");
      }
      ds.feature_count = field_count - 1;
    } else if (fields.size() != field_count) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": ragged row (" +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(field_count) + ")");
    }

    const int resolved = label_column >= 0 ? label_column
                                           : static_cast<int>(field_count) + label_column;
    if (resolved < 0 || resolved >= static_cast<int>(field_count)) {
      throw std::runtime_error(path + ": label column out of range");
    }

    for (size_t f = 0; f < field_count; ++f) {
      if (static_cast<int>(f) == resolved) continue;
      ds.features.push_back(detail::parse_number(fields[f], line_no));
    }

    const std::string& label_text = fields[resolved];
    auto it = std::find(ds.label_names.begin(), ds.label_names.end(), label_text);
    if (it == ds.label_names.end()) {
      if (fixed_labels) {
        throw std::runtime_error(path + " line " + std::to_string(line_no) + ": unknown label '" +
                                 label_text + "'");
      }
      ds.label_names.push_back(label_text);
      it = std::prev(ds.label_names.end());
    }
    ds.labels.push_back(static_cast<uint32_t>(it - ds.label_names.begin()));
  }
  if (ds.labels.empty()) throw std::runtime_error(path + ": no data rows");
  ds.class_count = static_cast<uint32_t>(ds.label_names.size());
  return ds;
}

/// Loads a delimited file of pure feature rows (no label column).
inline FeatureMatrix load_delimited_features(const std::string& path, char delimiter,
                                             bool has_header = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  FeatureMatrix m;
  std::string line;
  size_t line_no = 0;
  bool skipped_header = !has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!skipped_header) {
      skipped_header = true;
      continue;
    }
    const auto fields = detail::split_fields(line, delimiter);
    if (m.feature_count == 0) {
      m.feature_count = fields.size();
    } else if (fields.size() != m.feature_count) {
      throw std::runtime_error(path + " line " + std::to_string(line_no) + ": ragged row");
    }
    for (const auto& f : fields) m.features.push_back(detail::parse_number(f, line_no));
  }
  return m;
}

/// Writes a dataset back out as delimited text, label last, full precision.
inline void save_delimited(const LabeledDataset& ds, const std::string& path,
                           char delimiter = ',') {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[40];
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.sample(i);
    for (size_t f = 0; f < row.size(); ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", row[f]);
      out << buf << delimiter;
    }
    out << (ds.label_names.empty() ? std::to_string(ds.labels[i]) : ds.label_names[ds.labels[i]])
        << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline LabeledDataset subset(const LabeledDataset& ds, const std::vector<size_t>& indices) {
  LabeledDataset out;
  out.feature_count = ds.feature_count;
  out.class_count = ds.class_count;
  out.label_names = ds.label_names;
  out.features.reserve(indices.size() * ds.feature_count);
  out.labels.reserve(indices.size());
  for (size_t i : indices) {
    const auto row = ds.sample(i);
    out.features.insert(out.features.end(), row.begin(), row.end());
    out.labels.push_back(ds.labels[i]);
  }
  return out;
}

/// Seeded shuffle followed by a prefix/suffix split: the first
/// round(train_fraction * size) shuffled samples go to the first part.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                       double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("split: train_fraction must lie in (0, 1)");
  }
  std::vector<size_t> order(ds.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(seed);
  rng.shuffle(order);

  size_t train_n = static_cast<size_t>(std::floor(static_cast<double>(ds.size()) * train_fraction + 1e-9));
  train_n = std::min(std::max<size_t>(train_n, 1), ds.size() - 1);

  const std::vector<size_t> head(order.begin(), order.begin() + static_cast<ptrdiff_t>(train_n));
  const std::vector<size_t> tail(order.begin() + static_cast<ptrdiff_t>(train_n), order.end());
  return {subset(ds, head), subset(ds, tail)};
}

/// Like split, but class proportions are preserved: each class is shuffled
/// and cut separately, so rare classes keep at least one training sample.
inline std::pair<LabeledDataset, LabeledDataset> stratified_split(const LabeledDataset& ds,
                                                                  double train_fraction,
                                                                  uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("stratified_split: train_fraction must lie in (0, 1)");
  }
  std::vector<std::vector<size_t>> per_class(ds.class_count);
  for (size_t i = 0; i < ds.size(); ++i) per_class[ds.labels[i]].push_back(i);

  Rng rng(seed);
  std::vector<size_t> head;
  std::vector<size_t> tail;
  for (auto& members : per_class) {
    rng.shuffle(members);
    size_t cut = static_cast<size_t>(
        std::floor(static_cast<double>(members.size()) * train_fraction + 1e-9));
    if (cut == 0 && !members.empty()) cut = 1;
    head.insert(head.end(), members.begin(), members.begin() + static_cast<ptrdiff_t>(cut));
    tail.insert(tail.end(), members.begin() + static_cast<ptrdiff_t>(cut), members.end());
  }
  if (tail.empty()) {
    throw std::invalid_argument("stratified_split: every sample landed in the training part");
  }
  rng.shuffle(head);
  rng.shuffle(tail);
  return {subset(ds, head), subset(ds, tail)};
}

}  // namespace bthowen
