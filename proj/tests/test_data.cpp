// Copyright (c) 2026 The gils Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gils/data.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

namespace gils {
namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

/// Nearest-centroid classifier fit on one dataset, evaluated on another.
double centroid_accuracy(const Dataset& train, const Dataset& test) {
  std::vector<Vec> centroid(static_cast<std::size_t>(train.k),
                            Vec(static_cast<std::size_t>(train.feature_dim), 0.0));
  std::vector<int> count(static_cast<std::size_t>(train.k), 0);
  for (const auto& s : train.samples) {
    axpy(1.0, s.x, centroid[static_cast<std::size_t>(s.y)]);
    ++count[static_cast<std::size_t>(s.y)];
  }
  for (int c = 0; c < train.k; ++c)
    for (auto& v : centroid[static_cast<std::size_t>(c)])
      v /= std::max(count[static_cast<std::size_t>(c)], 1);
  std::size_t hits = 0;
  for (const auto& s : test.samples) {
    int best = 0;
    double best_d = l2_dist_sq(s.x, centroid[0]);
    for (int c = 1; c < test.k; ++c) {
      const double d = l2_dist_sq(s.x, centroid[static_cast<std::size_t>(c)]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (best == s.y) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(test.samples.size());
}

TEST(GenBlobs, FixedSeedIsBitIdentical) {
  const Dataset a = gen_blobs(3, 10, 4, 2.0, 77);
  const Dataset b = gen_blobs(3, 10, 4, 2.0, 77);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_EQ(a.samples[i].x, b.samples[i].x);
    EXPECT_EQ(a.samples[i].y, b.samples[i].y);
  }
  EXPECT_EQ(a.box_min, b.box_min);
  EXPECT_EQ(a.box_max, b.box_max);
}

TEST(GenBlobs, ZeroSeparationIsChanceLevel) {
  double acc_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Dataset train = gen_blobs(4, 100, 4, 0.0, seed);
    const Dataset test = gen_blobs(4, 100, 4, 0.0, seed + 100);
    acc_sum += centroid_accuracy(train, test);
  }
  EXPECT_NEAR(acc_sum / 5.0, 0.25, 0.05);
}

TEST(GenBlobs, LargeSeparationIsNearPerfect) {
  const Dataset train = gen_blobs(2, 300, 3, 10.0, 5);
  const Dataset test = gen_blobs(2, 300, 3, 10.0, 6);
  EXPECT_GE(centroid_accuracy(train, test), 0.999);
}

TEST(GenBlobs, PairwiseMeanDistanceEqualsSep) {
  // With sep s the class means sit on a scaled simplex; empirical means of
  // large blobs should be close to pairwise distance s.
  const double sep = 6.0;
  const Dataset ds = gen_blobs(3, 2000, 3, sep, 11);
  std::vector<Vec> mean(3, Vec(3, 0.0));
  std::vector<int> cnt(3, 0);
  for (const auto& s : ds.samples) {
    axpy(1.0, s.x, mean[static_cast<std::size_t>(s.y)]);
    ++cnt[static_cast<std::size_t>(s.y)];
  }
  for (int c = 0; c < 3; ++c)
    for (auto& v : mean[static_cast<std::size_t>(c)]) v /= cnt[static_cast<std::size_t>(c)];
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b)
      EXPECT_NEAR(std::sqrt(l2_dist_sq(mean[static_cast<std::size_t>(a)],
                                       mean[static_cast<std::size_t>(b)])),
                  sep, 0.15);
}

TEST(GenBlobs, DomainBoxContainsEverySample) {
  const Dataset ds = gen_blobs(3, 50, 4, 3.0, 9);
  for (const auto& s : ds.samples)
    for (int d = 0; d < ds.feature_dim; ++d) {
      EXPECT_GE(s.x[static_cast<std::size_t>(d)], ds.box_min[static_cast<std::size_t>(d)]);
      EXPECT_LE(s.x[static_cast<std::size_t>(d)], ds.box_max[static_cast<std::size_t>(d)]);
    }
}

TEST(GenBlobs, RejectsBadArguments) {
  EXPECT_THROW(gen_blobs(1, 10, 4, 1.0, 0), ValidationError);
  EXPECT_THROW(gen_blobs(3, 0, 4, 1.0, 0), ValidationError);
  EXPECT_THROW(gen_blobs(5, 10, 3, 1.0, 0), ValidationError);  // dim < k
}

TEST(GenShiftedTest, ZeroShiftEqualsFreshDraw) {
  const Dataset base = gen_blobs(3, 20, 4, 3.0, 21);
  const Dataset shifted = gen_shifted_test(base, 0.0, 555);
  Dataset fresh = gen_blobs(3, 20, 4, 3.0, 555);
  ASSERT_EQ(shifted.samples.size(), fresh.samples.size());
  for (std::size_t i = 0; i < fresh.samples.size(); ++i)
    EXPECT_EQ(shifted.samples[i].x, fresh.samples[i].x);
}

TEST(GenShiftedTest, PreservesLabelsAndMovesMeans) {
  const double mag = 4.0;
  const Dataset base = gen_blobs(2, 1500, 3, 3.0, 33);
  const Dataset shifted = gen_shifted_test(base, mag, 34);
  EXPECT_EQ(shifted.k, base.k);
  EXPECT_EQ(shifted.feature_dim, base.feature_dim);
  EXPECT_EQ(shifted.split, Split::test_shifted);
  // Empirical per-class means should have moved by about `mag`.
  for (int c = 0; c < base.k; ++c) {
    Vec mb(3, 0.0), ms(3, 0.0);
    int nb = 0, ns = 0;
    for (const auto& s : base.samples)
      if (s.y == c) {
        axpy(1.0, s.x, mb);
        ++nb;
      }
    for (const auto& s : shifted.samples)
      if (s.y == c) {
        axpy(1.0, s.x, ms);
        ++ns;
      }
    for (auto& v : mb) v /= nb;
    for (auto& v : ms) v /= ns;
    EXPECT_NEAR(std::sqrt(l2_dist_sq(mb, ms)), mag, 0.2);
  }
}

TEST(GenShiftedTest, LargeShiftDegradesSeenClassifier) {
  const Dataset train = gen_blobs(3, 200, 4, 3.0, 41);
  const Dataset seen = gen_blobs(3, 200, 4, 3.0, 42);
  const Dataset shifted = gen_shifted_test(train, 30.0, 43);
  const double seen_acc = centroid_accuracy(train, seen);
  const double shifted_acc = centroid_accuracy(train, shifted);
  EXPECT_LT(shifted_acc, seen_acc);
}

TEST(Csv, HandcraftedFileParsesExactly) {
  const std::string path = temp_path("gils_csv_hand.csv");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "1.5,-2.25,0\n0.125,3.75,1\n";
  }
  const Dataset ds = load_csv(path);
  ASSERT_EQ(ds.samples.size(), 2u);
  EXPECT_EQ(ds.samples[0].x, (Vec{1.5, -2.25}));
  EXPECT_EQ(ds.samples[0].y, 0);
  EXPECT_EQ(ds.samples[1].x, (Vec{0.125, 3.75}));
  EXPECT_EQ(ds.samples[1].y, 1);
  EXPECT_EQ(ds.k, 2);
  std::remove(path.c_str());
}

TEST(Csv, HeaderRowIsSkipped) {
  const std::string path = temp_path("gils_csv_header.csv");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "f1,f2,label\n1,2,0\n3,4,1\n";
  }
  EXPECT_EQ(load_csv(path).samples.size(), 2u);
  std::remove(path.c_str());
}

TEST(Csv, RaggedRowNamesTheLine) {
  const std::string path = temp_path("gils_csv_ragged.csv");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "1,2,0\n1,2,3,1\n";
  }
  try {
    load_csv(path);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::remove(path.c_str());
}

TEST(Csv, LabelOutsideExpectedKIsRejected) {
  const std::string path = temp_path("gils_csv_badlabel.csv");
  {
    std::ofstream out(path, std::ios::trunc);
    out << "1,2,0\n1,2,7\n";
  }
  EXPECT_THROW(load_csv(path, 3), FormatError);
  std::remove(path.c_str());
}

TEST(Csv, SaveLoadRoundTripsBitForBit) {
  const std::string path = temp_path("gils_csv_rt.csv");
  Rng rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    Dataset ds;
    ds.k = 3;
    ds.feature_dim = 4;
    const auto n = static_cast<std::size_t>(rng.uniform_int(2, 40));
    for (std::size_t i = 0; i < n; ++i) {
      Sample s;
      for (int d = 0; d < 4; ++d) s.x.push_back(rng.normal() * 1e3);
      s.y = static_cast<int>(rng.uniform_int(0, 2));
      ds.samples.push_back(std::move(s));
    }
    save_csv(ds, path);
    const Dataset back = load_csv(path, 3);
    ASSERT_EQ(back.samples.size(), ds.samples.size());
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(back.samples[i].x, ds.samples[i].x);
      EXPECT_EQ(back.samples[i].y, ds.samples[i].y);
    }
  }
  std::remove(path.c_str());
}

TEST(TensorBin, HandcraftedFileParsesExactly) {
  const std::string path = temp_path("gils_bin_hand.bin");
  Dataset ds;
  ds.k = 2;
  ds.feature_dim = 2;
  ds.samples = {{{1.5, -2.0}, 0}, {{0.25, 8.0}, 1}};
  save_tensor_bin(ds, path);
  const Dataset back = load_tensor_bin(path);
  ASSERT_EQ(back.samples.size(), 2u);
  EXPECT_EQ(back.samples[0].x, (Vec{1.5, -2.0}));
  EXPECT_EQ(back.samples[1].x, (Vec{0.25, 8.0}));
  EXPECT_EQ(back.samples[0].y, 0);
  EXPECT_EQ(back.samples[1].y, 1);
  EXPECT_EQ(back.k, 2);
  std::remove(path.c_str());
}

TEST(TensorBin, BadMagicIsFormatError) {
  const std::string path = temp_path("gils_bin_magic.bin");
  {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    out << "NOPE" << std::string(24, '\0');
  }
  EXPECT_THROW(load_tensor_bin(path), FormatError);
  std::remove(path.c_str());
}

TEST(TensorBin, TruncationReportsByteCounts) {
  const std::string path = temp_path("gils_bin_trunc.bin");
  Dataset ds;
  ds.k = 2;
  ds.feature_dim = 3;
  ds.samples = {{{1.0, 2.0, 3.0}, 0}, {{4.0, 5.0, 6.0}, 1}};
  save_tensor_bin(ds, path);
  // Chop the last 5 bytes off.
  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full - 5);
  try {
    load_tensor_bin(path);
    FAIL() << "expected TruncationError";
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.expected, full);
    EXPECT_EQ(e.actual, full - 5);
  }
  std::remove(path.c_str());
}

TEST(TensorBin, UnsupportedVersionIsFormatError) {
  const std::string path = temp_path("gils_bin_ver.bin");
  Dataset ds;
  ds.k = 2;
  ds.feature_dim = 1;
  ds.samples = {{{1.0}, 0}, {{2.0}, 1}};
  save_tensor_bin(ds, path);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v2[4] = {2, 0, 0, 0};
    f.write(v2, 4);
  }
  EXPECT_THROW(load_tensor_bin(path), FormatError);
  std::remove(path.c_str());
}

TEST(TensorBin, SaveLoadIsFixedPointAfterOneCycle) {
  // Arbitrary doubles lose precision on the f32 disk format, but one cycle
  // later the values are exactly representable and stay put forever.
  const std::string path = temp_path("gils_bin_fix.bin");
  Rng rng(5150);
  Dataset ds;
  ds.k = 4;
  ds.feature_dim = 3;
  for (int i = 0; i < 50; ++i) {
    Sample s;
    for (int d = 0; d < 3; ++d) s.x.push_back(rng.normal() * 10);
    s.y = static_cast<int>(rng.uniform_int(0, 3));
    ds.samples.push_back(std::move(s));
  }
  save_tensor_bin(ds, path);
  const Dataset once = load_tensor_bin(path);
  save_tensor_bin(once, path);
  const Dataset twice = load_tensor_bin(path);
  ASSERT_EQ(once.samples.size(), twice.samples.size());
  for (std::size_t i = 0; i < once.samples.size(); ++i) {
    EXPECT_EQ(once.samples[i].x, twice.samples[i].x);
    EXPECT_EQ(once.samples[i].y, twice.samples[i].y);
  }
  std::remove(path.c_str());
}

}  // namespace
}  // namespace gils
