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

#include "gils/numkit.hpp"

#include <cmath>

#include <gtest/gtest.h>

namespace gils {
namespace {

TEST(Softmax, UniformOnEqualInputs) {
  const Vec out = softmax({0.0, 0.0, 0.0});
  for (double p : out) EXPECT_DOUBLE_EQ(p, 1.0 / 3.0);
}

TEST(Softmax, AnalyticTwoClass) {
  const Vec out = softmax({std::log(2.0), 0.0});
  EXPECT_NEAR(out[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(out[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, MaxShiftPreventsOverflow) {
  const Vec out = softmax({1000.0, 0.0});
  EXPECT_NEAR(out[0], 1.0, 1e-300);
  EXPECT_GE(out[1], 0.0);
  EXPECT_LE(out[1], 1e-300);
  EXPECT_TRUE(all_finite(out));
}

TEST(Softmax, EmptyInputIsDimensionError) {
  EXPECT_THROW(softmax({}), DimensionError);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  Rng rng(20260809);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 12));
    Vec v(n);
    for (auto& x : v) x = rng.uniform(-30.0, 30.0);
    const Vec p = softmax(v);
    double sum = 0.0;
    for (double x : p) sum += x;
    EXPECT_NEAR(sum, 1.0, 1e-12);
    const double shift = rng.uniform(-50.0, 50.0);
    Vec w = v;
    for (auto& x : w) x += shift;
    const Vec q = softmax(w);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  }
}

TEST(Matvec, IdentityAndZeroAndHandValues) {
  const Vec v{3.0, 4.0};
  EXPECT_EQ(matvec(Mat::identity(2), v), (Vec{3.0, 4.0}));
  EXPECT_EQ(matvec(Mat(2, 2), v), (Vec{0.0, 0.0}));
  const Mat a(2, 2, {1.0, 2.0, 3.0, 4.0});
  EXPECT_EQ(matvec(a, {1.0, 1.0}), (Vec{3.0, 7.0}));
}

TEST(Matvec, ShapeMismatchThrows) {
  EXPECT_THROW(matvec(Mat(2, 3), Vec{1.0, 2.0}), DimensionError);
  EXPECT_THROW(matvec_transposed(Mat(2, 3), Vec{1.0, 2.0, 3.0}), DimensionError);
}

// Oracle: an index-by-index triple loop, written independently of Mat's
// storage internals.
Vec naive_matvec(const Mat& a, const Vec& v) {
  Vec out;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * v[j];
    out.push_back(acc);
  }
  return out;
}

TEST(Matvec, MatchesNaiveOracleBitForBit) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const auto rows = static_cast<std::size_t>(rng.uniform_int(1, 9));
    const auto cols = static_cast<std::size_t>(rng.uniform_int(1, 9));
    Mat a(rows, cols);
    for (auto& x : a.data()) x = rng.uniform(-5.0, 5.0);
    Vec v(cols);
    for (auto& x : v) x = rng.uniform(-5.0, 5.0);
    const Vec got = matvec(a, v);
    const Vec want = naive_matvec(a, v);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], want[i]);
  }
}

TEST(Norms, HandValues) {
  EXPECT_DOUBLE_EQ(l2_norm({3.0, 4.0}), 5.0);
  const Vec v{1.5, -2.5, 0.25};
  EXPECT_DOUBLE_EQ(l2_dist_sq(v, v), 0.0);
  EXPECT_DOUBLE_EQ(l2_dist_sq({1.0, 0.0}, {0.0, 1.0}), 2.0);
  EXPECT_THROW(l2_dist_sq({1.0}, {1.0, 2.0}), DimensionError);
}

TEST(Norms, NonFiniteRejected) {
  EXPECT_THROW(l2_norm({1.0, std::numeric_limits<double>::infinity()}), NumericError);
  EXPECT_THROW(softmax({std::nan(""), 0.0}), NumericError);
}

TEST(MatCol, ExtractsColumns) {
  const Mat a(2, 3, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  EXPECT_EQ(a.col(0), (Vec{1.0, 4.0}));
  EXPECT_EQ(a.col(2), (Vec{3.0, 6.0}));
  EXPECT_THROW(a.col(3), DimensionError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform_int(-12, 12));
    EXPECT_EQ(parse_double(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1000.1), "1000.1");
  EXPECT_EQ(format_double(1001.0), "1001");
}

TEST(RngDeterminism, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(ParallelFor, MatchesSerialResults) {
  std::vector<double> serial(257), parallel(257);
  auto body = [](std::size_t i) { return std::sin(static_cast<double>(i)) * 3.0; };
  parallel_for(serial.size(), [&](std::size_t i) { serial[i] = body(i); }, false);
  parallel_for(parallel.size(), [&](std::size_t i) { parallel[i] = body(i); }, true);
  EXPECT_EQ(serial, parallel);
}

}  // namespace
}  // namespace gils
