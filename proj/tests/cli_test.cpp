#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "bthowen/dataset.hpp"
#include "bthowen/sweep.hpp"
#include "support/oracles.hpp"

#ifndef BTHOWEN_CLI_PATH
#error "BTHOWEN_CLI_PATH must point at the command line tool"
#endif

namespace {

struct CmdResult {
  int code = -1;
  std::string output;
};

CmdResult run_cli(const std::string& args) {
  const std::string command = std::string(BTHOWEN_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(command.c_str(), "r");
  if (pipe == nullptr) throw std::runtime_error("popen failed");
  CmdResult result;
  char buffer[4096];
  size_t got;
  while ((got = ::fread(buffer, 1, sizeof buffer, pipe)) > 0) result.output.append(buffer, got);
  const int status = ::pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string find_value(const std::string& output, const std::string& key) {
  const std::string needle = key + "=";
  size_t pos = output.find(needle);
  while (pos != std::string::npos && pos != 0 && output[pos - 1] != '\n') {
    pos = output.find(needle, pos + 1);
  }
  if (pos == std::string::npos) return "";
  const size_t start = pos + needle.size();
  const size_t end = output.find('\n', start);
  return output.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

class CliRun : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("bthowen_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::filesystem::path dir_;
};

void write_feature_rows(const bthowen::LabeledDataset& ds, const std::string& path) {
  std::ofstream out(path);
  char buf[40];
  for (size_t i = 0; i < ds.size(); ++i) {
    for (size_t f = 0; f < ds.feature_count; ++f) {
      std::snprintf(buf, sizeof buf, "%.17g", ds.sample(i)[f]);
      out << buf << (f + 1 < ds.feature_count ? "," : "\n");
    }
  }
}

void append_be32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v >> 24));
  s.push_back(static_cast<char>(v >> 16));
  s.push_back(static_cast<char>(v >> 8));
  s.push_back(static_cast<char>(v));
}

TEST_F(CliRun, TrainEvaluatePredictInspectRoundTrip) {
  const auto train = oracles::make_blobs(3, 120, 5, 501);
  const auto test = oracles::make_blobs(3, 40, 5, 502);
  bthowen::save_delimited(train, path("train.csv"));
  bthowen::save_delimited(test, path("test.csv"));
  write_feature_rows(test, path("rows.csv"));

  const CmdResult trained = run_cli(
      "train --format delimited --train-data " + path("train.csv") + " --test-data " +
      path("test.csv") +
      " --bits-per-input 8 --inputs-per-filter 5 --entries 256 --hashes 2 --seed 9 --out " +
      path("model.bthw"));
  ASSERT_EQ(trained.code, 0) << trained.output;
  EXPECT_NE(find_value(trained.output, "b"), "");
  EXPECT_NE(find_value(trained.output, "val_acc"), "");
  const std::string train_test_acc = find_value(trained.output, "test_acc");
  ASSERT_NE(train_test_acc, "");
  EXPECT_GT(std::stod(train_test_acc), 0.85);

  const CmdResult evaluated = run_cli("evaluate --model " + path("model.bthw") +
                                      " --format delimited --test-data " + path("test.csv"));
  ASSERT_EQ(evaluated.code, 0) << evaluated.output;
  EXPECT_EQ(find_value(evaluated.output, "accuracy"), train_test_acc);
  EXPECT_EQ(find_value(evaluated.output, "samples"), std::to_string(test.size()));

  const CmdResult predicted =
      run_cli("predict --model " + path("model.bthw") + " --data " + path("rows.csv"));
  ASSERT_EQ(predicted.code, 0) << predicted.output;
  std::istringstream lines(predicted.output);
  std::string line;
  size_t row = 0;
  size_t correct = 0;
  while (std::getline(lines, line)) {
    ASSERT_LT(row, test.size());
    if (line == test.label_names[test.labels[row]]) ++correct;
    ++row;
  }
  EXPECT_EQ(row, test.size());
  EXPECT_GT(static_cast<double>(correct) / static_cast<double>(test.size()), 0.85);

  const CmdResult inspected = run_cli("inspect --model " + path("model.bthw"));
  ASSERT_EQ(inspected.code, 0) << inspected.output;
  EXPECT_EQ(find_value(inspected.output, "state"), "counting");
  EXPECT_EQ(find_value(inspected.output, "entries_per_filter"), "256");
  EXPECT_EQ(find_value(inspected.output, "classes"), "3");
}

TEST_F(CliRun, BinarizedModelKeepsAccuracy) {
  const auto train = oracles::make_blobs(2, 100, 4, 601);
  const auto test = oracles::make_blobs(2, 30, 4, 602);
  bthowen::save_delimited(train, path("train.csv"));
  bthowen::save_delimited(test, path("test.csv"));

  const CmdResult plain = run_cli(
      "train --train-data " + path("train.csv") + " --test-data " + path("test.csv") +
      " --bits-per-input 6 --inputs-per-filter 4 --entries 128 --hashes 2 --seed 4 --out " +
      path("counting.bthw"));
  ASSERT_EQ(plain.code, 0) << plain.output;
  const CmdResult frozen = run_cli(
      "train --train-data " + path("train.csv") + " --test-data " + path("test.csv") +
      " --bits-per-input 6 --inputs-per-filter 4 --entries 128 --hashes 2 --seed 4 --binarize "
      "--out " +
      path("binary.bthw"));
  ASSERT_EQ(frozen.code, 0) << frozen.output;
  EXPECT_EQ(find_value(plain.output, "test_acc"), find_value(frozen.output, "test_acc"));

  const CmdResult inspected = run_cli("inspect --model " + path("binary.bthw"));
  EXPECT_EQ(find_value(inspected.output, "state"), "binarized");

  const CmdResult evaluated = run_cli("evaluate --model " + path("binary.bthw") + " --test-data " +
                                      path("test.csv"));
  ASSERT_EQ(evaluated.code, 0) << evaluated.output;
  EXPECT_EQ(find_value(evaluated.output, "accuracy"), find_value(plain.output, "test_acc"));
}

TEST_F(CliRun, ConfigOverridesApply) {
  const auto train = oracles::make_blobs(2, 60, 4, 701);
  bthowen::save_delimited(train, path("train.csv"));
  const CmdResult trained =
      run_cli("train --train-data " + path("train.csv") +
              " --bits-per-input 8 --entries 512 --config t=3,entries=64 --config n=4 --out " +
              path("model.bthw"));
  ASSERT_EQ(trained.code, 0) << trained.output;
  const CmdResult inspected = run_cli("inspect --model " + path("model.bthw"));
  EXPECT_EQ(find_value(inspected.output, "bits_per_input"), "3");
  EXPECT_EQ(find_value(inspected.output, "entries_per_filter"), "64");
  EXPECT_EQ(find_value(inspected.output, "inputs_per_filter"), "4");
}

TEST_F(CliRun, IdxPipelineEndToEnd) {
  const auto train = oracles::make_blobs(3, 100, 4, 801, 0.6, 2.0);
  const auto test = oracles::make_blobs(3, 30, 4, 802, 0.6, 2.0);

  const auto write_idx = [&](const bthowen::LabeledDataset& ds, const std::string& img_path,
                             const std::string& lab_path) {
    std::string img;
    append_be32(img, 2051);
    append_be32(img, static_cast<uint32_t>(ds.size()));
    append_be32(img, 2);
    append_be32(img, 2);
    std::string lab;
    append_be32(lab, 2049);
    append_be32(lab, static_cast<uint32_t>(ds.size()));
    for (size_t i = 0; i < ds.size(); ++i) {
      for (size_t f = 0; f < 4; ++f) {
        const double v = ds.sample(i)[f];
        const double scaled = (v + 10.0) * 12.0;
        img.push_back(static_cast<char>(static_cast<uint8_t>(
            scaled < 0 ? 0 : (scaled > 255 ? 255 : scaled))));
      }
      lab.push_back(static_cast<char>(static_cast<uint8_t>(ds.labels[i])));
    }
    std::ofstream(img_path, std::ios::binary) << img;
    std::ofstream(lab_path, std::ios::binary) << lab;
  };
  write_idx(train, path("train-img"), path("train-lab"));
  write_idx(test, path("test-img"), path("test-lab"));

  const CmdResult trained = run_cli(
      "train --format idx --train-images " + path("train-img") + " --train-labels " +
      path("train-lab") + " --test-images " + path("test-img") + " --test-labels " +
      path("test-lab") +
      " --bits-per-input 8 --inputs-per-filter 8 --entries 128 --hashes 2 --seed 2 --out " +
      path("model.bthw"));
  ASSERT_EQ(trained.code, 0) << trained.output;
  EXPECT_GT(std::stod(find_value(trained.output, "test_acc")), 0.8);

  const CmdResult predicted =
      run_cli("predict --model " + path("model.bthw") + " --images " + path("test-img"));
  ASSERT_EQ(predicted.code, 0) << predicted.output;
  std::istringstream lines(predicted.output);
  std::string line;
  size_t rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, test.size());
}

TEST_F(CliRun, SweepWritesResultsAndFrontier) {
  const auto train = oracles::make_blobs(2, 60, 4, 901);
  const auto test = oracles::make_blobs(2, 20, 4, 902);
  bthowen::save_delimited(train, path("train.csv"));
  bthowen::save_delimited(test, path("test.csv"));

  const CmdResult swept = run_cli(
      "sweep --train-data " + path("train.csv") + " --test-data " + path("test.csv") +
      " --name blobs --grid-bits 4,6 --grid-inputs 4 --grid-entries 64,128 --grid-hashes 1,2 "
      "--seed 5 --workers 2 --pareto --out " +
      path("results.csv"));
  ASSERT_EQ(swept.code, 0) << swept.output;
  EXPECT_EQ(find_value(swept.output, "points"), "8");
  EXPECT_NE(swept.output.find("best: "), std::string::npos);
  EXPECT_NE(swept.output.find("pareto: "), std::string::npos);

  std::ifstream results(path("results.csv"));
  std::string line;
  size_t lines = 0;
  bool header_ok = false;
  while (std::getline(results, line)) {
    if (lines == 0) header_ok = line == bthowen::kSweepHeader;
    ++lines;
  }
  EXPECT_TRUE(header_ok);
  EXPECT_EQ(lines, 9u);
}

TEST_F(CliRun, ErrorsAreOneLineAndNonzero) {
  const CmdResult missing = run_cli("evaluate --model " + path("nope.bthw") + " --test-data " +
                                    path("nope.csv"));
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(missing.output.rfind("error: ", 0), 0u) << missing.output;
  EXPECT_EQ(std::count(missing.output.begin(), missing.output.end(), '\n'), 1);

  const CmdResult bad_config =
      run_cli("train --train-data " + path("nope.csv") + " --config bogus=1");
  EXPECT_EQ(bad_config.code, 1);
  EXPECT_EQ(bad_config.output.rfind("error: ", 0), 0u) << bad_config.output;

  const CmdResult no_sub = run_cli("");
  EXPECT_NE(no_sub.code, 0);
}

}  // namespace
