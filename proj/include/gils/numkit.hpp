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

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "gils/errors.hpp"

namespace gils {

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

inline void require_finite(const Vec& v, const char* what) {
  if (!all_finite(v)) throw NumericError(std::string(what) + ": non-finite entry");
}

/// Dense row-major matrix of 64-bit reals.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Mat(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw DimensionError("Mat: storage length " + std::to_string(data_.size()) +
                           " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Copy of column j; used to read the per-class vectors of a classifier.
  Vec col(std::size_t j) const {
    if (j >= cols_) throw DimensionError("Mat::col: index out of range");
    Vec out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  bool finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](double x) { return std::isfinite(x); });
  }

  bool operator==(const Mat& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Numerically stable softmax via max shift. Entries positive, sum 1.
inline Vec softmax(const Vec& v) {
  if (v.empty()) throw DimensionError("softmax: empty input");
  require_finite(v, "softmax");
  const double m = *std::max_element(v.begin(), v.end());
  Vec out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

inline Vec matvec(const Mat& a, const Vec& v) {
  if (a.cols() != v.size())
    throw DimensionError("matvec: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " * vec(" +
                         std::to_string(v.size()) + ")");
  Vec out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

/// A^T * v without forming the transpose.
inline Vec matvec_transposed(const Mat& a, const Vec& v) {
  if (a.rows() != v.size())
    throw DimensionError("matvec_transposed: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + "^T * vec(" +
                         std::to_string(v.size()) + ")");
  Vec out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j) * v[i];
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(const Vec& v) {
  require_finite(v, "l2_norm");
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

inline double l2_dist_sq(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("l2_dist_sq: length mismatch");
  require_finite(a, "l2_dist_sq");
  require_finite(b, "l2_dist_sq");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline void axpy(double alpha, const Vec& x, Vec& y) {
  if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec sub(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw DimensionError("sub: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

/// Deterministic random source. mt19937_64 engine with in-house uniform and
/// Box-Muller normal so streams do not depend on the stdlib's distribution
/// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925287;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
  }

  /// Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(eng_() % span);
  }

  /// Fisher-Yates shuffle, driven by this engine only.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

/// Shortest decimal representation that round-trips the exact double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last)
    throw FormatError("cannot parse real number from '" + s + "'");
  return v;
}

/// Worker cap for data-parallel loops: min(hardware, GILS_THREADS if set).
inline unsigned max_workers() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("GILS_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1 && static_cast<unsigned long>(cap) < hw)
      hw = static_cast<unsigned>(cap);
  }
  return hw;
}

/// Runs fn(i) for i in [0, n). Results must be written to per-index slots;
/// chunk scheduling is static so the work assignment is deterministic.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                         bool parallel = true) {
  const unsigned workers = parallel ? max_workers() : 1;
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += nthreads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace gils
