#include "bthowen/dataset.hpp"

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "support/oracles.hpp"

namespace {

using bthowen::LabeledDataset;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("bthowen_dataset_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_file(const std::string& name, const std::string& content) const {
    std::ofstream out(path(name), std::ios::binary);
    out << content;
  }

  std::filesystem::path dir_;
};

void append_be32(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v >> 24));
  s.push_back(static_cast<char>(v >> 16));
  s.push_back(static_cast<char>(v >> 8));
  s.push_back(static_cast<char>(v));
}

class IdxFiles : public TempDir {
 protected:
  void write_idx_pair(const std::vector<std::vector<uint8_t>>& images,
                      const std::vector<uint8_t>& labels, uint32_t rows, uint32_t cols,
                      uint32_t image_magic = 2051, uint32_t label_magic = 2049,
                      int label_count_override = -1) {
    std::string img;
    append_be32(img, image_magic);
    append_be32(img, static_cast<uint32_t>(images.size()));
    append_be32(img, rows);
    append_be32(img, cols);
    for (const auto& image : images) img.append(image.begin(), image.end());
    write_file("images", img);

    std::string lab;
    append_be32(lab, label_magic);
    append_be32(lab, label_count_override >= 0 ? static_cast<uint32_t>(label_count_override)
                                               : static_cast<uint32_t>(labels.size()));
    lab.append(labels.begin(), labels.end());
    write_file("labels", lab);
  }
};

TEST_F(IdxFiles, RoundTrip) {
  write_idx_pair({{0, 10, 20, 30}, {255, 0, 5, 9}, {1, 2, 3, 4}}, {2, 0, 1}, 2, 2);
  const LabeledDataset ds = bthowen::load_idx(path("images"), path("labels"));
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.feature_count, 4u);
  EXPECT_EQ(ds.class_count, 3u);
  EXPECT_EQ(ds.labels, (std::vector<uint32_t>{2, 0, 1}));
  EXPECT_DOUBLE_EQ(ds.sample(0)[1], 10.0);
  EXPECT_DOUBLE_EQ(ds.sample(1)[0], 255.0);

  const bthowen::FeatureMatrix m = bthowen::load_idx_images(path("images"));
  EXPECT_EQ(m.size(), 3u);
  EXPECT_EQ(m.feature_count, 4u);
  EXPECT_DOUBLE_EQ(m.row(2)[3], 4.0);
}

TEST_F(IdxFiles, RejectsBadMagic) {
  write_idx_pair({{1, 2, 3, 4}}, {0}, 2, 2, 2052);
  EXPECT_THROW(bthowen::load_idx(path("images"), path("labels")), std::runtime_error);
  write_idx_pair({{1, 2, 3, 4}}, {0}, 2, 2, 2051, 2048);
  EXPECT_THROW(bthowen::load_idx(path("images"), path("labels")), std::runtime_error);
}

TEST_F(IdxFiles, RejectsCountMismatchAndTruncation) {
  write_idx_pair({{1, 2, 3, 4}}, {0, 1}, 2, 2);
  EXPECT_THROW(bthowen::load_idx(path("images"), path("labels")), std::runtime_error);
  write_idx_pair({{1, 2, 3}}, {0}, 2, 2);  // one byte short
  EXPECT_THROW(bthowen::load_idx(path("images"), path("labels")), std::runtime_error);
  EXPECT_THROW(bthowen::load_idx(path("missing"), path("labels")), std::runtime_error);
}

TEST_F(TempDir, DelimitedBasics) {
  write_file("data.csv",
             "5.1,3.5,setosa\n"
             "4.9,3.0,setosa\n"
             "6.3,2.9,virginica\n"
             "5.8,2.7,versicolor\n");
  const LabeledDataset ds = bthowen::load_delimited(path("data.csv"), ',', -1);
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.feature_count, 2u);
  EXPECT_EQ(ds.class_count, 3u);
  // first-appearance order
  EXPECT_EQ(ds.label_names, (std::vector<std::string>{"setosa", "virginica", "versicolor"}));
  EXPECT_EQ(ds.labels, (std::vector<uint32_t>{0, 0, 1, 2}));
  EXPECT_DOUBLE_EQ(ds.sample(2)[1], 2.9);
}

TEST_F(TempDir, DelimitedLabelColumnVariants) {
  write_file("first.csv", "a,1,2\nb,3,4\n");
  const LabeledDataset first = bthowen::load_delimited(path("first.csv"), ',', 0);
  EXPECT_EQ(first.label_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_DOUBLE_EQ(first.sample(1)[0], 3.0);

  const LabeledDataset negative = bthowen::load_delimited(path("first.csv"), ',', -3);
  EXPECT_EQ(negative.labels, first.labels);

  EXPECT_THROW(bthowen::load_delimited(path("first.csv"), ',', 3), std::runtime_error);
  EXPECT_THROW(bthowen::load_delimited(path("first.csv"), ',', -4), std::runtime_error);
}

TEST_F(TempDir, DelimitedHeaderAndBlankLines) {
  write_file("data.csv", "x,y,label\n\n1,2,a\n\n3,4,b\n");
  const LabeledDataset ds = bthowen::load_delimited(path("data.csv"), ',', -1, true);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.label_names, (std::vector<std::string>{"a", "b"}));
}

TEST_F(TempDir, DelimitedWhitespaceRuns) {
  write_file("data.txt", "  1.5   2.5  cp \n3.5\t4.5 im\n");
  const LabeledDataset ds = bthowen::load_delimited(path("data.txt"), ' ', -1);
  EXPECT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.feature_count, 2u);
  EXPECT_EQ(ds.label_names, (std::vector<std::string>{"cp", "im"}));
  EXPECT_DOUBLE_EQ(ds.sample(1)[1], 4.5);
}

TEST_F(TempDir, DelimitedRejectsMalformedRows) {
  write_file("ragged.csv", "1,2,a\n3,b\n");
  EXPECT_THROW(bthowen::load_delimited(path("ragged.csv"), ',', -1), std::runtime_error);
  write_file("notnum.csv", "1,x,a\n");
  EXPECT_THROW(bthowen::load_delimited(path("notnum.csv"), ',', -1), std::runtime_error);
  write_file("empty.csv", "\n\n");
  EXPECT_THROW(bthowen::load_delimited(path("empty.csv"), ',', -1), std::runtime_error);
  write_file("onecol.csv", "a\nb\n");
  EXPECT_THROW(bthowen::load_delimited(path("onecol.csv"), ',', -1), std::runtime_error);
}

TEST_F(TempDir, DelimitedFixedDictionary) {
  write_file("train.csv", "1,2,b\n3,4,a\n");
  write_file("test.csv", "5,6,a\n7,8,b\n");
  write_file("bad.csv", "5,6,c\n");
  const LabeledDataset train = bthowen::load_delimited(path("train.csv"), ',', -1);
  const std::vector<std::string> dict = train.label_names;
  const LabeledDataset test = bthowen::load_delimited(path("test.csv"), ',', -1, false, &dict);
  EXPECT_EQ(test.labels, (std::vector<uint32_t>{1, 0}));
  EXPECT_EQ(test.class_count, train.class_count);
  EXPECT_THROW(bthowen::load_delimited(path("bad.csv"), ',', -1, false, &dict),
               std::runtime_error);
}

TEST_F(TempDir, FeatureRowsWithoutLabels) {
  write_file("rows.csv", "1,2,3\n4,5,6\n");
  const bthowen::FeatureMatrix m = bthowen::load_delimited_features(path("rows.csv"), ',');
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.feature_count, 3u);
  EXPECT_DOUBLE_EQ(m.row(1)[2], 6.0);
}

TEST_F(TempDir, SaveDelimitedRoundTrips) {
  const LabeledDataset original = oracles::make_blobs(3, 20, 4, 917);
  bthowen::save_delimited(original, path("out.csv"));
  const LabeledDataset reloaded = bthowen::load_delimited(path("out.csv"), ',', -1);
  ASSERT_EQ(reloaded.size(), original.size());
  ASSERT_EQ(reloaded.feature_count, original.feature_count);
  for (size_t i = 0; i < original.size(); ++i) {
    EXPECT_EQ(reloaded.label_names[reloaded.labels[i]],
              original.label_names[original.labels[i]]);
    for (size_t f = 0; f < original.feature_count; ++f) {
      EXPECT_DOUBLE_EQ(reloaded.sample(i)[f], original.sample(i)[f]);
    }
  }
}

TEST(Split, SizesAreSeededAndExact) {
  const LabeledDataset ds = oracles::make_blobs(2, 15, 3, 5);  // 30 samples
  auto parts = bthowen::split(ds, 2.0 / 3.0, 9);
  EXPECT_EQ(parts.first.size(), 20u);
  EXPECT_EQ(parts.second.size(), 10u);

  auto again = bthowen::split(ds, 2.0 / 3.0, 9);
  EXPECT_EQ(parts.first.features, again.first.features);
  EXPECT_EQ(parts.second.labels, again.second.labels);

  auto other = bthowen::split(ds, 2.0 / 3.0, 10);
  EXPECT_NE(parts.first.features, other.first.features);

  EXPECT_THROW(bthowen::split(ds, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(bthowen::split(ds, 1.0, 1), std::invalid_argument);
}

TEST(Split, PartitionsWithoutLossOrDuplication) {
  const LabeledDataset ds = oracles::make_blobs(3, 9, 2, 8);  // 27 samples
  auto parts = bthowen::split(ds, 0.4, 3);
  EXPECT_EQ(parts.first.size() + parts.second.size(), ds.size());

  std::multiset<std::pair<double, double>> original, pieces;
  for (size_t i = 0; i < ds.size(); ++i) original.insert({ds.sample(i)[0], ds.sample(i)[1]});
  for (size_t i = 0; i < parts.first.size(); ++i) {
    pieces.insert({parts.first.sample(i)[0], parts.first.sample(i)[1]});
  }
  for (size_t i = 0; i < parts.second.size(); ++i) {
    pieces.insert({parts.second.sample(i)[0], parts.second.sample(i)[1]});
  }
  EXPECT_EQ(original, pieces);
}

TEST(Split, StratifiedPreservesClassProportions) {
  // unbalanced classes: 30 of class 0, 12 of class 1, 3 of class 2
  LabeledDataset ds;
  ds.feature_count = 1;
  ds.class_count = 3;
  ds.label_names = {"a", "b", "c"};
  const size_t counts[] = {30, 12, 3};
  for (uint32_t c = 0; c < 3; ++c) {
    for (size_t i = 0; i < counts[c]; ++i) {
      ds.features.push_back(static_cast<double>(c * 100 + i));
      ds.labels.push_back(c);
    }
  }

  auto parts = bthowen::stratified_split(ds, 2.0 / 3.0, 5);
  std::vector<size_t> train_per_class(3, 0), test_per_class(3, 0);
  for (uint32_t label : parts.first.labels) ++train_per_class[label];
  for (uint32_t label : parts.second.labels) ++test_per_class[label];

  EXPECT_EQ(train_per_class, (std::vector<size_t>{20, 8, 2}));
  EXPECT_EQ(test_per_class, (std::vector<size_t>{10, 4, 1}));
  EXPECT_EQ(parts.first.size() + parts.second.size(), ds.size());

  auto again = bthowen::stratified_split(ds, 2.0 / 3.0, 5);
  EXPECT_EQ(parts.first.features, again.first.features);
  auto other = bthowen::stratified_split(ds, 2.0 / 3.0, 6);
  EXPECT_NE(parts.first.features, other.first.features);
}

TEST(Split, StratifiedKeepsRareClassesTrainable) {
  // a class with a single sample must land in the training part
  LabeledDataset ds;
  ds.feature_count = 1;
  ds.class_count = 2;
  ds.label_names = {"common", "rare"};
  for (size_t i = 0; i < 9; ++i) {
    ds.features.push_back(static_cast<double>(i));
    ds.labels.push_back(0);
  }
  ds.features.push_back(999.0);
  ds.labels.push_back(1);

  auto parts = bthowen::stratified_split(ds, 0.5, 1);
  size_t rare_in_train = 0;
  for (uint32_t label : parts.first.labels) rare_in_train += label == 1;
  EXPECT_EQ(rare_in_train, 1u);
  EXPECT_THROW(bthowen::stratified_split(ds, 1.5, 1), std::invalid_argument);
}

}  // namespace
