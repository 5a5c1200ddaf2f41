#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "bthowen/dataset.hpp"
#include "bthowen/model.hpp"
#include "bthowen/persistence.hpp"

namespace bthowen {

/// Cartesian grid of hyperparameters, enumerated with bits_per_input
/// outermost and hashes innermost.
struct SweepGrid {
  std::vector<uint32_t> bits_per_input;
  std::vector<uint32_t> inputs_per_filter;
  std::vector<uint32_t> entries;
  std::vector<uint32_t> hashes;

  size_t point_count() const {
    return bits_per_input.size() * inputs_per_filter.size() * entries.size() * hashes.size();
  }

  struct Point {
    uint32_t bits_per_input;
    uint32_t inputs_per_filter;
    uint32_t entries;
    uint32_t hashes;
  };

  Point point_at(size_t index) const {
    if (index >= point_count()) throw std::out_of_range("grid index out of range");
    const size_t nk = hashes.size();
    const size_t ne = entries.size() * nk;
    const size_t nn = inputs_per_filter.size() * ne;
    return {bits_per_input[index / nn], inputs_per_filter[(index % nn) / ne],
            entries[(index % ne) / nk], hashes[index % nk]};
  }

  /// The image-classification reference grid: 8 x 3 x 7 x 6 = 1008 points.
  static SweepGrid image_default() {
    return {{1, 2, 3, 4, 5, 6, 7, 8},
            {28, 49, 56},
            {128, 256, 512, 1024, 2048, 4096, 8192},
            {1, 2, 3, 4, 5, 6}};
  }
};

struct SweepResult {
  std::string dataset;
  uint32_t bits_per_input = 0;
  uint32_t inputs_per_filter = 0;
  uint32_t entries = 0;
  uint32_t hashes = 0;
  uint64_t seed = 0;
  uint32_t bleach = 0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double size_kib = 0.0;
  double seconds = 0.0;
  bool failed = false;
};

struct SweepOptions {
  unsigned workers = 1;
  bool record_timing = false;     // off keeps result files reproducible
  double validation_fraction = 0.1;
  bool resume = true;             // skip grid points already in the results file
};

namespace detail {

inline uint64_t splitmix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic per-point seed derived from the base seed and the
/// hyperparameters, so a point's result does not depend on grid layout.
inline uint64_t point_seed(uint64_t base_seed, uint32_t bits_per_input, uint32_t inputs_per_filter,
                           uint32_t entries, uint32_t hashes) {
  uint64_t h = base_seed;
  h = detail::splitmix64(h ^ bits_per_input);
  h = detail::splitmix64(h ^ inputs_per_filter);
  h = detail::splitmix64(h ^ entries);
  h = detail::splitmix64(h ^ hashes);
  return h;
}

inline constexpr const char* kSweepHeader =
    "dataset,t,n,entries,k,seed,b,val_acc,test_acc,size_kib,seconds";

inline std::string format_sweep_row(const SweepResult& r) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%s,%u,%u,%u,%u,%llu,%u,%.6f,%.6f,%.6g,%.3f", r.dataset.c_str(),
                r.bits_per_input, r.inputs_per_filter, r.entries, r.hashes,
                static_cast<unsigned long long>(r.seed), r.bleach, r.val_acc, r.test_acc,
                r.size_kib, r.seconds);
  return buf;
}

inline SweepResult parse_sweep_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  fields.push_back(current);
  if (fields.size() != 11) throw std::runtime_error("malformed sweep row: " + line);
  SweepResult r;
  r.dataset = fields[0];
  r.bits_per_input = static_cast<uint32_t>(std::stoul(fields[1]));
  r.inputs_per_filter = static_cast<uint32_t>(std::stoul(fields[2]));
  r.entries = static_cast<uint32_t>(std::stoul(fields[3]));
  r.hashes = static_cast<uint32_t>(std::stoul(fields[4]));
  r.seed = std::stoull(fields[5]);
  r.bleach = static_cast<uint32_t>(std::stoul(fields[6]));
  r.val_acc = std::stod(fields[7]);
  r.test_acc = std::stod(fields[8]);
  r.size_kib = std::stod(fields[9]);
  r.seconds = std::stod(fields[10]);
  r.failed = std::isnan(r.test_acc);
  return r;
}

inline std::vector<SweepResult> load_sweep_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<SweepResult> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first && line == kSweepHeader) {
      first = false;
      continue;
    }
    first = false;
    rows.push_back(parse_sweep_row(line));
  }
  return rows;
}

/// Trains and scores one grid point: the training set is shuffled by the
/// point seed, the trailing fraction held out for bleach selection, and the
/// chosen threshold scored on the test set.
inline SweepResult run_sweep_point(const std::string& dataset_name, const LabeledDataset& train,
                                   const LabeledDataset& test, SweepGrid::Point point,
                                   uint64_t base_seed, double validation_fraction,
                                   bool record_timing) {
  SweepResult r;
  r.dataset = dataset_name;
  r.bits_per_input = point.bits_per_input;
  r.inputs_per_filter = point.inputs_per_filter;
  r.entries = point.entries;
  r.hashes = point.hashes;
  r.seed = point_seed(base_seed, point.bits_per_input, point.inputs_per_filter, point.entries,
                      point.hashes);
  const auto start = std::chrono::steady_clock::now();
  try {
    ModelConfig config;
    config.feature_count = static_cast<uint32_t>(train.feature_count);
    config.class_count = train.class_count;
    config.bits_per_input = point.bits_per_input;
    config.inputs_per_filter = point.inputs_per_filter;
    config.entries = point.entries;
    config.hashes = point.hashes;
    config.seed = r.seed;

    auto parts = split(train, 1.0 - validation_fraction, r.seed);
    BthowenModel model(config);
    model.train(parts.first);
    const BleachSelection sel = model.select_bleach(parts.second);
    r.bleach = sel.b;
    r.val_acc = sel.accuracy;
    r.test_acc = model.evaluate(test, sel.b);
    r.size_kib = payload_kib(config);
  } catch (const std::exception&) {
    r.failed = true;
    r.bleach = 0;
    r.val_acc = std::nan("");
    r.test_acc = std::nan("");
    r.size_kib = 0.0;
  }
  if (record_timing) {
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
  return r;
}

/// Runs every grid point, appending rows to results_path in grid order
/// regardless of worker count, so the output file is reproducible
/// byte for byte. Already-present points are kept as they are.
inline std::vector<SweepResult> run_sweep(const std::string& dataset_name,
                                          const LabeledDataset& train, const LabeledDataset& test,
                                          const SweepGrid& grid, uint64_t base_seed,
                                          const SweepOptions& options,
                                          const std::string& results_path = "") {
  const size_t total = grid.point_count();
  if (total == 0) throw std::invalid_argument("run_sweep: empty grid");

  std::map<std::tuple<uint32_t, uint32_t, uint32_t, uint32_t>, SweepResult> done;
  bool file_exists = false;
  if (!results_path.empty() && options.resume) {
    std::ifstream probe(results_path);
    file_exists = probe.good();
    if (file_exists) {
      for (auto& row : load_sweep_results(results_path)) {
        if (row.dataset != dataset_name) continue;
        done.emplace(std::make_tuple(row.bits_per_input, row.inputs_per_filter, row.entries,
                                     row.hashes),
                     row);
      }
    }
  }

  std::ofstream out;
  if (!results_path.empty()) {
    out.open(results_path, file_exists ? std::ios::app : std::ios::out);
    if (!out) throw std::runtime_error("cannot open " + results_path + " for writing");
    if (!file_exists) out << kSweepHeader << '\n';
  }

  std::vector<SweepResult> results(total);
  std::vector<bool> needs_compute(total, false);
  std::vector<size_t> todo;
  for (size_t i = 0; i < total; ++i) {
    const auto p = grid.point_at(i);
    const auto key = std::make_tuple(p.bits_per_input, p.inputs_per_filter, p.entries, p.hashes);
    auto it = done.find(key);
    if (it != done.end()) {
      results[i] = it->second;
    } else {
      needs_compute[i] = true;
      todo.push_back(i);
    }
  }

  std::mutex mu;
  std::map<size_t, SweepResult> pending;
  size_t next_commit = 0;
  const auto commit_ready = [&] {
    // called under mu: flush any freshly computed rows that are next in
    // grid order, skipping rows that were already on disk
    while (next_commit < total) {
      if (!needs_compute[next_commit]) {
        ++next_commit;
        continue;
      }
      auto it = pending.find(next_commit);
      if (it == pending.end()) break;
      results[next_commit] = it->second;
      if (out.is_open()) out << format_sweep_row(it->second) << '\n';
      pending.erase(it);
      ++next_commit;
    }
    if (out.is_open()) out.flush();
  };

  std::atomic<size_t> cursor{0};
  const auto worker = [&] {
    while (true) {
      const size_t slot = cursor.fetch_add(1);
      if (slot >= todo.size()) break;
      const size_t index = todo[slot];
      SweepResult row = run_sweep_point(dataset_name, train, test, grid.point_at(index), base_seed,
                                        options.validation_fraction, options.record_timing);
      std::lock_guard<std::mutex> lock(mu);
      pending.emplace(index, std::move(row));
      commit_ready();
    }
  };

  const unsigned worker_count = std::max(1u, options.workers);
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (unsigned i = 0; i < worker_count; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  {
    std::lock_guard<std::mutex> lock(mu);
    commit_ready();
  }
  if (out.is_open() && !out) throw std::runtime_error("write failed: " + results_path);
  return results;
}

/// Rows no larger model beats: sorted by size, keeping each row that is
/// strictly more accurate on the test set than everything smaller.
inline std::vector<SweepResult> pareto_frontier(std::vector<SweepResult> rows) {
  std::erase_if(rows, [](const SweepResult& r) { return r.failed || std::isnan(r.test_acc); });
  std::sort(rows.begin(), rows.end(), [](const SweepResult& a, const SweepResult& b) {
    if (a.size_kib != b.size_kib) return a.size_kib < b.size_kib;
    return a.test_acc > b.test_acc;
  });
  std::vector<SweepResult> frontier;
  double best = -1.0;
  for (auto& row : rows) {
    if (row.test_acc > best) {
      best = row.test_acc;
      frontier.push_back(std::move(row));
    }
  }
  return frontier;
}

}  // namespace bthowen
