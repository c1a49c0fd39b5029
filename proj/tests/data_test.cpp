/* Copyright 2026 The DeepSelective Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <numeric>
#include <set>

#include "deepselective/analysis.hpp"
#include "deepselective/data.hpp"
#include "deepselective/errors.hpp"

namespace deepselective {
namespace {

using data::Split;

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("deepselective_data_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

data::SyntheticSpec small_spec() {
  data::SyntheticSpec s;
  s.num_features = 12;
  s.num_informative = 3;
  s.num_samples = 600;
  return s;
}

TEST(SyntheticTest, SingleInformativeFeatureThresholdIsExact) {
  data::SyntheticSpec s;
  s.num_features = 5;
  s.num_informative = 1;
  s.num_samples = 500;
  s.noise = 0.0;
  auto ds = data::generate_synthetic(s);
  ASSERT_EQ(ds.informative.size(), 1u);
  const auto col = ds.column(ds.informative[0]);
  // One threshold on the informative column, in either direction.
  std::vector<std::size_t> order(ds.num_samples);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return col[a] < col[b]; });
  std::size_t best = 0;
  for (std::size_t cut = 0; cut <= ds.num_samples; ++cut) {
    std::size_t below_pos = 0, above_pos = 0;
    for (std::size_t r = 0; r < ds.num_samples; ++r) {
      if (ds.labels[order[r]] == 1.0) (r < cut ? below_pos : above_pos)++;
    }
    const std::size_t pos = below_pos + above_pos;
    const std::size_t rising = (cut - below_pos) + above_pos;
    const std::size_t falling = below_pos + (ds.num_samples - cut - above_pos);
    best = std::max({best, rising, falling});
    (void)pos;
  }
  EXPECT_EQ(best, ds.num_samples);
}

TEST(SyntheticTest, InformativeFeaturesCarryMoreLabelInformation) {
  data::SyntheticSpec s;
  s.num_features = 20;
  s.num_informative = 4;
  s.num_samples = 10000;
  auto ds = data::generate_synthetic(s);
  std::set<std::size_t> informative(ds.informative.begin(), ds.informative.end());
  double min_informative = 1e9, max_nuisance = 0.0;
  for (std::size_t j = 0; j < ds.num_features; ++j) {
    const auto col = ds.column(j);
    const double mi = analysis::mutual_information(col, ds.labels).value;
    if (informative.count(j)) min_informative = std::min(min_informative, mi);
    else max_nuisance = std::max(max_nuisance, mi);
  }
  EXPECT_GT(min_informative, max_nuisance);
}

TEST(SyntheticTest, FixedSeedReproducesDataset) {
  auto a = data::generate_synthetic(small_spec());
  auto b = data::generate_synthetic(small_spec());
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.splits, b.splits);
  EXPECT_EQ(a.informative, b.informative);
  auto spec = small_spec();
  spec.seed = 8;
  EXPECT_NE(data::generate_synthetic(spec).features, a.features);
}

TEST(SyntheticTest, LabelsIgnoreNuisanceResampling) {
  auto spec = small_spec();
  auto a = data::generate_synthetic(spec);
  spec.nuisance_seed = 999;
  auto b = data::generate_synthetic(spec);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.informative, b.informative);
  std::set<std::size_t> informative(a.informative.begin(), a.informative.end());
  bool nuisance_changed = false;
  for (std::size_t j = 0; j < a.num_features; ++j) {
    if (informative.count(j)) continue;
    nuisance_changed |= a.column(j) != b.column(j);
  }
  EXPECT_TRUE(nuisance_changed);
}

TEST(SyntheticTest, NuisanceCorrelationFollowsSpec) {
  auto spec = small_spec();
  spec.num_samples = 20000;
  spec.correlation = 0.6;
  auto ds = data::generate_synthetic(spec);
  std::set<std::size_t> informative(ds.informative.begin(), ds.informative.end());
  std::vector<std::size_t> nuisance;
  for (std::size_t j = 0; j < ds.num_features && nuisance.size() < 2; ++j)
    if (!informative.count(j)) nuisance.push_back(j);
  const auto a = ds.column(nuisance[0]);
  const auto b = ds.column(nuisance[1]);
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  EXPECT_NEAR(ab / std::sqrt(aa * bb), 0.6, 0.03);
}

TEST(SyntheticTest, InvalidSpecsAreRejected) {
  auto spec = small_spec();
  spec.num_informative = 13;
  EXPECT_THROW(data::generate_synthetic(spec), ValidationError);
  spec = small_spec();
  spec.num_informative = 0;
  EXPECT_THROW(data::generate_synthetic(spec), ValidationError);
  spec = small_spec();
  spec.missing_rate = 1.5;
  EXPECT_THROW(data::generate_synthetic(spec), ValidationError);
}

TEST(SyntheticTest, MissingCellsGetIndicators) {
  auto spec = small_spec();
  spec.missing_rate = 0.1;
  auto ds = data::generate_synthetic(spec);
  EXPECT_EQ(ds.num_features, 24u);
  EXPECT_EQ(ds.feature_names[12], "mask→" + ds.feature_names[0]);
  for (std::size_t i = 0; i < ds.num_samples; ++i) {
    for (std::size_t j = 0; j < 12; ++j) {
      const double m = ds.features[i * 24 + 12 + j];
      ASSERT_TRUE(m == 0.0 || m == 1.0);
      if (m == 1.0) EXPECT_EQ(ds.features[i * 24 + j], 0.0);
    }
  }
}

TEST(CsvTest, SmallFileIsStandardized) {
  const std::string text = "a,label,b\n1,0,10\n2,1,20\n3,1,60\n";
  auto ds = data::ingest_csv_text(text, {});
  ASSERT_EQ(ds.num_samples, 3u);
  ASSERT_EQ(ds.num_features, 2u);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.labels, (std::vector<double>{0, 1, 1}));
  const double sa = std::sqrt(2.0 / 3.0);
  const double sb = std::sqrt((400.0 + 100.0 + 900.0) / 3.0);
  const std::vector<double> expect{(1 - 2) / sa, (10 - 30) / sb, (2 - 2) / sa, (20 - 30) / sb,
                                   (3 - 2) / sa, (60 - 30) / sb};
  for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(ds.features[i], expect[i], 1e-12);
}

TEST(CsvTest, MissingCellBecomesZeroWithIndicator) {
  const std::string text = "Glucose,HR,label\n5,70,0\n,80,1\n7,90,1\n9,,0\n";
  auto ds = data::ingest_csv_text(text, {});
  ASSERT_EQ(ds.num_features, 4u);
  EXPECT_EQ(ds.feature_names[2], "mask→Glucose");
  EXPECT_EQ(ds.feature_names[3], "mask→HR");
  EXPECT_EQ(ds.features[1 * 4 + 0], 0.0);
  EXPECT_EQ(ds.features[1 * 4 + 2], 1.0);
  EXPECT_EQ(ds.features[3 * 4 + 3], 1.0);
  double indicator_total = 0.0;
  for (std::size_t i = 0; i < 4; ++i) indicator_total += ds.features[i * 4 + 2] + ds.features[i * 4 + 3];
  EXPECT_EQ(indicator_total, 2.0);
  // Glucose statistics come from the observed cells only.
  EXPECT_NEAR(ds.offset[0], 7.0, 1e-12);
}

TEST(CsvTest, TrainColumnsAreStandardized) {
  std::string text = "x,y,z,label\n";
  for (int i = 0; i < 200; ++i) {
    text += std::to_string(i * 0.37 + 5) + "," + std::to_string((i * 7919) % 101) + "," +
            std::to_string(std::sin(i) * 1000) + "," + std::to_string(i % 3 == 0 ? 1 : 0) + "\n";
  }
  data::CsvOptions opt;
  opt.fractions = {0.8, 0.1, 0.1};
  auto ds = data::ingest_csv_text(text, opt);
  const auto train = ds.indices(Split::kTrain);
  for (std::size_t j = 0; j < 3; ++j) {
    double mean = 0.0, var = 0.0;
    for (auto i : train) mean += ds.features[i * 3 + j];
    mean /= train.size();
    for (auto i : train) var += std::pow(ds.features[i * 3 + j] - mean, 2);
    var /= train.size();
    EXPECT_LT(std::abs(mean), 1e-10);
    EXPECT_NEAR(var, 1.0, 1e-10);
  }
}

TEST(CsvTest, DestandardizingRecoversFileValues) {
  const std::string text = "p,q,label\n0.125,-3,1\n7.5,1e3,0\n-2.25,42,1\n11,0.001,0\n";
  auto ds = data::ingest_csv_text(text, {});
  const double raw[4][2] = {{0.125, -3}, {7.5, 1e3}, {-2.25, 42}, {11, 0.001}};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_NEAR(ds.raw_value(i, j), raw[i][j], 1e-9);
}

TEST(CsvTest, BadCellsReportLineNumbers) {
  const std::string text = "a,label\n1,0\nabc,1\n2,0\n3,x\n";
  try {
    data::ingest_csv_text(text, {});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 5"), std::string::npos) << msg;
    EXPECT_NE(msg.find("abc"), std::string::npos) << msg;
  }
}

TEST(CsvTest, MissingLabelColumnIsConfigError) {
  EXPECT_THROW(data::ingest_csv_text("a,b\n1,2\n", {}), ValidationError);
  data::CsvOptions opt;
  opt.label_column = "outcome";
  auto ds = data::ingest_csv_text("a,outcome\n1,1\n2,0\n", opt);
  EXPECT_EQ(ds.num_features, 1u);
}

TEST(CsvTest, SingleClassFileIsRejected) {
  EXPECT_THROW(data::ingest_csv_text("a,label\n1,1\n2,1\n", {}), ClassBalanceError);
}

TEST(CsvTest, UnreadableFileIsDataError) {
  EXPECT_THROW(data::ingest_csv("/nonexistent/file.csv", {}), DataError);
}

TEST(WindowTest, SingleStepWindowHasEqualStatistics) {
  std::vector<data::TemporalRecord> records{{"p1", 0.0, {4.0, -1.0}, 0.0},
                                            {"p1", 1.0, {6.0, 3.0}, 1.0}};
  std::vector<std::string> names{"hr", "temp"};
  auto w = data::window_temporal(records, names);
  EXPECT_EQ(w.skipped, 1u);
  ASSERT_EQ(w.dataset.num_samples, 1u);
  ASSERT_EQ(w.dataset.num_features, 8u);
  EXPECT_EQ(w.dataset.features, (std::vector<double>{4, -1, 4, -1, 4, -1, 4, -1}));
  EXPECT_EQ(w.dataset.labels, (std::vector<double>{1.0}));
  EXPECT_EQ(w.dataset.feature_names[0], "last→hr");
  EXPECT_EQ(w.dataset.feature_names[7], "max→temp");
}

TEST(WindowTest, ConstantSeriesGivesConstantStatistics) {
  std::vector<data::TemporalRecord> records;
  for (int t = 0; t < 6; ++t) records.push_back({"p", double(t), {2.5}, double(t % 2)});
  std::vector<std::string> names{"x"};
  auto w = data::window_temporal(records, names);
  EXPECT_EQ(w.dataset.num_samples, 5u);
  for (double v : w.dataset.features) EXPECT_EQ(v, 2.5);
}

TEST(WindowTest, ThreeStepSeriesMatchesHandComputation) {
  std::vector<data::TemporalRecord> records{{"a", 0, {1.0}, 0},   {"b", 0, {10.0}, 1},
                                            {"a", 1, {5.0}, 1},   {"a", 2, {3.0}, 0},
                                            {"a", 3, {100.0}, 1}, {"b", 5, {20.0}, 0}};
  std::vector<std::string> names{"v"};
  auto w = data::window_temporal(records, names);
  EXPECT_EQ(w.skipped, 2u);
  ASSERT_EQ(w.dataset.num_samples, 4u);
  // a@1 <- [1]; a@2 <- [1,5]; a@3 <- [1,5,3]; b@5 <- [10]
  const std::vector<double> expect{1, 1, 1, 1, 5, 3, 1, 5, 3, 3, 1, 5, 10, 10, 10, 10};
  EXPECT_EQ(w.dataset.features, expect);
  EXPECT_EQ(w.dataset.labels, (std::vector<double>{1, 0, 1, 0}));

  auto h2 = data::window_temporal(records, names, 2);
  ASSERT_EQ(h2.dataset.num_samples, 2u);
  EXPECT_EQ(h2.dataset.features, (std::vector<double>{1, 1, 1, 1, 5, 3, 1, 5}));
}

TEST(WindowTest, UnsortedRecordsAreRejected) {
  std::vector<data::TemporalRecord> records{{"a", 2, {1.0}, 0}, {"a", 1, {2.0}, 1}};
  std::vector<std::string> names{"v"};
  EXPECT_THROW(data::window_temporal(records, names), DataError);
}

data::Dataset balanced(std::size_t n) {
  data::Dataset ds;
  ds.num_samples = n;
  for (std::size_t i = 0; i < n; ++i) ds.labels.push_back(static_cast<double>(i % 2));
  return ds;
}

TEST(SplitTest, EightyTenTenIsStratified) {
  auto ds = balanced(100);
  data::assign_splits(ds, {0.8, 0.1, 0.1}, 5);
  EXPECT_EQ(ds.count(Split::kTrain), 80u);
  EXPECT_EQ(ds.count(Split::kValidation), 10u);
  EXPECT_EQ(ds.count(Split::kTest), 10u);
  for (auto s : {Split::kTrain, Split::kValidation, Split::kTest}) {
    auto c = ds.class_counts(s);
    EXPECT_LE(std::abs(static_cast<long>(c[0]) - static_cast<long>(c[1])), 1);
  }
}

TEST(SplitTest, SeedDeterminesAssignment) {
  auto a = balanced(100), b = balanced(100), c = balanced(100);
  data::assign_splits(a, {0.8, 0.1, 0.1}, 5);
  data::assign_splits(b, {0.8, 0.1, 0.1}, 5);
  data::assign_splits(c, {0.8, 0.1, 0.1}, 6);
  EXPECT_EQ(a.splits, b.splits);
  EXPECT_NE(a.splits, c.splits);
}

TEST(SplitTest, AllTrainFractions) {
  auto ds = balanced(10);
  data::assign_splits(ds, {1.0, 0.0, 0.0}, 1);
  EXPECT_EQ(ds.count(Split::kTrain), 10u);
}

TEST(SplitTest, BadFractionsAndEmptyClassesAreRejected) {
  auto ds = balanced(10);
  EXPECT_THROW(data::assign_splits(ds, {0.5, 0.2, 0.2}, 1), ParameterError);
  EXPECT_THROW(data::assign_splits(ds, {1.2, -0.1, -0.1}, 1), ParameterError);
  // Two samples per class cannot populate three splits.
  auto tiny = balanced(4);
  EXPECT_THROW(data::assign_splits(tiny, {0.5, 0.25, 0.25}, 1), ClassBalanceError);
}

TEST(DatasetIoTest, RoundTripIsLossless) {
  auto spec = small_spec();
  spec.missing_rate = 0.05;
  auto ds = data::generate_synthetic(spec);
  auto dir = scratch_dir("io");
  data::save_dataset(ds, dir / "dataset.json");
  auto back = data::load_dataset(dir / "dataset.json");
  EXPECT_EQ(back.features, ds.features);
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_EQ(back.splits, ds.splits);
  EXPECT_EQ(back.feature_names, ds.feature_names);
  EXPECT_EQ(back.informative, ds.informative);
  EXPECT_EQ(back.offset, ds.offset);
  EXPECT_EQ(back.scale, ds.scale);

  // The column store is little-endian float64, columns first.
  std::ifstream in(dir / "dataset.bin", std::ios::binary);
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
  double first;
  std::memcpy(&first, &bits, 8);
  EXPECT_EQ(first, ds.features[0]);
  std::filesystem::remove_all(dir);
}

TEST(DatasetIoTest, DamagedFilesAreDataErrors) {
  auto ds = data::generate_synthetic(small_spec());
  auto dir = scratch_dir("damaged");
  data::save_dataset(ds, dir / "dataset.json");
  std::filesystem::resize_file(dir / "dataset.bin", 80);
  EXPECT_THROW(data::load_dataset(dir / "dataset.json"), DataError);
  { std::ofstream(dir / "dataset.json") << "[1,2"; }
  EXPECT_THROW(data::load_dataset(dir / "dataset.json"), DataError);
  EXPECT_THROW(data::load_dataset(dir / "absent.json"), DataError);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace deepselective
