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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "gils/errors.hpp"
#include "gils/numkit.hpp"

namespace gils {

enum class Split { train, test_seen, test_shifted };

inline const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test_seen: return "test_seen";
    case Split::test_shifted: return "test_shifted";
  }
  return "?";
}

struct Sample {
  Vec x;
  int y = 0;
};

/// Parameters of the Gaussian-blob generator, kept alongside generated
/// datasets so derived sets (shifted tests) can reuse the true class means.
struct BlobSpec {
  int k = 0;
  int n_per_class = 0;
  int feature_dim = 0;
  double class_sep = 0.0;
  std::uint64_t seed = 0;
};

struct Dataset {
  std::vector<Sample> samples;
  int k = 0;
  int feature_dim = 0;
  Vec box_min;  // per-dimension domain bounds; attacks clip to this box
  Vec box_max;
  Split split = Split::train;
  std::string provenance;          // human-readable origin
  std::optional<BlobSpec> blob;    // set when generated from Gaussian blobs

  std::size_t size() const { return samples.size(); }

  void validate() const {
    if (samples.empty()) throw ValidationError("dataset: empty");
    if (k < 2) throw ValidationError("dataset: class count must be >= 2");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (static_cast<int>(s.x.size()) != feature_dim)
        throw DimensionError("dataset: sample " + std::to_string(i) +
                             " has dim " + std::to_string(s.x.size()));
      if (s.y < 0 || s.y >= k)
        throw ValidationError("dataset: sample " + std::to_string(i) +
                              " has label " + std::to_string(s.y) +
                              " outside [0, " + std::to_string(k) + ")");
      require_finite(s.x, "dataset sample");
    }
  }
};

namespace detail {

/// k points in R^dim with all pairwise distances equal to sep.
/// Built from scaled standard-basis vectors; needs dim >= k.
inline std::vector<Vec> simplex_means(int k, int dim, double sep) {
  if (dim < k)
    throw ValidationError("gen_blobs: feature_dim (" + std::to_string(dim) +
                          ") must be >= k (" + std::to_string(k) +
                          ") for simplex means");
  std::vector<Vec> means(static_cast<std::size_t>(k), Vec(static_cast<std::size_t>(dim), 0.0));
  const double scale = sep / std::sqrt(2.0);
  for (int c = 0; c < k; ++c) means[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)] = scale;
  return means;
}

inline void fit_box(Dataset& ds, double pad) {
  ds.box_min.assign(static_cast<std::size_t>(ds.feature_dim),
                    std::numeric_limits<double>::infinity());
  ds.box_max.assign(static_cast<std::size_t>(ds.feature_dim),
                    -std::numeric_limits<double>::infinity());
  for (const auto& s : ds.samples) {
    for (int d = 0; d < ds.feature_dim; ++d) {
      ds.box_min[static_cast<std::size_t>(d)] = std::min(ds.box_min[static_cast<std::size_t>(d)], s.x[static_cast<std::size_t>(d)]);
      ds.box_max[static_cast<std::size_t>(d)] = std::max(ds.box_max[static_cast<std::size_t>(d)], s.x[static_cast<std::size_t>(d)]);
    }
  }
  for (int d = 0; d < ds.feature_dim; ++d) {
    ds.box_min[static_cast<std::size_t>(d)] -= pad;
    ds.box_max[static_cast<std::size_t>(d)] += pad;
  }
}

inline Dataset draw_blobs(const std::vector<Vec>& means, const BlobSpec& spec,
                          std::uint64_t draw_seed, Split split,
                          const std::string& provenance) {
  Rng rng(draw_seed);
  Dataset ds;
  ds.k = spec.k;
  ds.feature_dim = spec.feature_dim;
  ds.split = split;
  ds.provenance = provenance;
  ds.blob = spec;
  ds.samples.reserve(static_cast<std::size_t>(spec.k) * static_cast<std::size_t>(spec.n_per_class));
  for (int c = 0; c < spec.k; ++c) {
    for (int i = 0; i < spec.n_per_class; ++i) {
      Sample s;
      s.y = c;
      s.x.resize(static_cast<std::size_t>(spec.feature_dim));
      for (int d = 0; d < spec.feature_dim; ++d)
        s.x[static_cast<std::size_t>(d)] = means[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] + rng.normal();
      ds.samples.push_back(std::move(s));
    }
  }
  fit_box(ds, 0.5);
  return ds;
}

}  // namespace detail

/// Unit-variance Gaussian blobs with class means on a scaled simplex
/// (pairwise mean distance == class_sep). Pure function of its arguments.
inline Dataset gen_blobs(int k, int n_per_class, int feature_dim,
                         double class_sep, std::uint64_t seed,
                         Split split = Split::train) {
  if (k < 2) throw ValidationError("gen_blobs: k must be >= 2");
  if (n_per_class < 1) throw ValidationError("gen_blobs: n_per_class must be >= 1");
  if (class_sep < 0.0) throw ValidationError("gen_blobs: class_sep must be >= 0");
  BlobSpec spec{k, n_per_class, feature_dim, class_sep, seed};
  const auto means = detail::simplex_means(k, feature_dim, class_sep);
  std::ostringstream prov;
  prov << "blobs(k=" << k << ",n=" << n_per_class << ",dim=" << feature_dim
       << ",sep=" << format_double(class_sep) << ",seed=" << seed << ")";
  return detail::draw_blobs(means, spec, seed, split, prov.str());
}

/// Fresh draw from the base generator with every class mean translated by a
/// single random direction of the given magnitude; the synthetic stand-in
/// for an unseen test domain. Labels and k are preserved.
inline Dataset gen_shifted_test(const Dataset& base, double shift_magnitude,
                                std::uint64_t seed) {
  if (!base.blob)
    throw ValidationError("gen_shifted_test: base dataset has no blob generator record");
  if (shift_magnitude < 0.0)
    throw ValidationError("gen_shifted_test: shift magnitude must be >= 0");
  const BlobSpec& spec = *base.blob;
  auto means = detail::simplex_means(spec.k, spec.feature_dim, spec.class_sep);

  Rng dir_rng(seed ^ 0x9e3779b97f4a7c15ull);
  Vec dir(static_cast<std::size_t>(spec.feature_dim));
  double norm = 0.0;
  do {
    for (auto& d : dir) d = dir_rng.normal();
    norm = l2_norm(dir);
  } while (norm < 1e-12);
  for (auto& d : dir) d *= shift_magnitude / norm;
  for (auto& m : means) axpy(1.0, dir, m);

  std::ostringstream prov;
  prov << base.provenance << " shifted(mag=" << format_double(shift_magnitude)
       << ",seed=" << seed << ")";
  Dataset ds = detail::draw_blobs(means, spec, seed, Split::test_shifted, prov.str());
  ds.blob.reset();  // derived set; means no longer on the plain simplex
  return ds;
}

// ---------------------------------------------------------------------------
// CSV format: one sample per row "f1,...,fd,label". Optional non-numeric
// header row. Reals printed in shortest round-trip form.
// ---------------------------------------------------------------------------

inline void save_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("save_csv: cannot open '" + path + "'");
  for (const auto& s : ds.samples) {
    for (double v : s.x) out << format_double(v) << ',';
    out << s.y << '\n';
  }
  if (!out) throw IoError("save_csv: write failed for '" + path + "'");
}

/// Parses a CSV dataset. k is inferred as max(label)+1 unless expected_k > 0,
/// in which case any label >= expected_k is an error naming the line.
inline Dataset load_csv(const std::string& path, int expected_k = 0) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open '" + path + "'");
  Dataset ds;
  ds.provenance = "csv(" + path + ")";
  std::string line;
  std::size_t lineno = 0;
  int dim = -1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma == std::string::npos
                                              ? std::string::npos
                                              : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() < 2)
      throw FormatError("load_csv: line " + std::to_string(lineno) +
                        ": expected at least 2 fields");
    // A first row that does not parse as numbers is treated as a header.
    if (lineno == 1) {
      bool numeric = true;
      try {
        parse_double(fields[0]);
      } catch (const FormatError&) {
        numeric = false;
      }
      if (!numeric) continue;
    }
    Sample s;
    const int row_dim = static_cast<int>(fields.size()) - 1;
    if (dim < 0) {
      dim = row_dim;
    } else if (row_dim != dim) {
      throw FormatError("load_csv: line " + std::to_string(lineno) +
                        ": ragged row (" + std::to_string(row_dim) +
                        " features, expected " + std::to_string(dim) + ")");
    }
    s.x.reserve(static_cast<std::size_t>(row_dim));
    for (int d = 0; d < row_dim; ++d) {
      try {
        s.x.push_back(parse_double(fields[static_cast<std::size_t>(d)]));
      } catch (const FormatError&) {
        throw FormatError("load_csv: line " + std::to_string(lineno) +
                          ": bad real in field " + std::to_string(d + 1));
      }
    }
    const std::string& lab = fields.back();
    int y = 0;
    const auto res = std::from_chars(lab.data(), lab.data() + lab.size(), y);
    if (res.ec != std::errc{} || res.ptr != lab.data() + lab.size())
      throw FormatError("load_csv: line " + std::to_string(lineno) +
                        ": bad label '" + lab + "'");
    if (y < 0)
      throw FormatError("load_csv: line " + std::to_string(lineno) +
                        ": negative label");
    if (expected_k > 0 && y >= expected_k)
      throw FormatError("load_csv: line " + std::to_string(lineno) + ": label " +
                        std::to_string(y) + " >= k (" +
                        std::to_string(expected_k) + ")");
    max_label = std::max(max_label, y);
    s.y = y;
    ds.samples.push_back(std::move(s));
  }
  if (ds.samples.empty()) throw FormatError("load_csv: no samples in '" + path + "'");
  ds.feature_dim = static_cast<int>(ds.samples.front().x.size());
  ds.k = expected_k > 0 ? expected_k : std::max(max_label + 1, 2);
  detail::fit_box(ds, 0.0);
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------
// GILS binary format (little-endian):
//   magic "GILS", u32 version=1, u32 n, u32 d, u32 k,
//   then n records of (d x f32 features, u32 label).
// Features are stored as f32; in-memory data is f64.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint32_t get_u32(const std::string& buf, std::size_t off) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

}  // namespace detail

inline void save_tensor_bin(const Dataset& ds, const std::string& path) {
  std::string buf;
  buf.reserve(16 + ds.samples.size() * (static_cast<std::size_t>(ds.feature_dim) + 1) * 4);
  buf += "GILS";
  detail::put_u32(buf, 1);
  detail::put_u32(buf, static_cast<std::uint32_t>(ds.samples.size()));
  detail::put_u32(buf, static_cast<std::uint32_t>(ds.feature_dim));
  detail::put_u32(buf, static_cast<std::uint32_t>(ds.k));
  for (const auto& s : ds.samples) {
    for (double v : s.x) {
      const float f = static_cast<float>(v);
      std::uint32_t bits = 0;
      std::memcpy(&bits, &f, 4);
      detail::put_u32(buf, bits);
    }
    detail::put_u32(buf, static_cast<std::uint32_t>(s.y));
  }
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw IoError("save_tensor_bin: cannot open '" + path + "'");
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("save_tensor_bin: write failed for '" + path + "'");
}

inline Dataset load_tensor_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("load_tensor_bin: cannot open '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 20)
    throw TruncationError("load_tensor_bin: header too short", 20, buf.size());
  if (buf.compare(0, 4, "GILS") != 0)
    throw FormatError("load_tensor_bin: bad magic in '" + path + "'");
  const std::uint32_t version = detail::get_u32(buf, 4);
  if (version != 1)
    throw FormatError("load_tensor_bin: unsupported version " + std::to_string(version));
  const std::uint32_t n = detail::get_u32(buf, 8);
  const std::uint32_t d = detail::get_u32(buf, 12);
  const std::uint32_t k = detail::get_u32(buf, 16);
  const std::size_t expected = 20 + static_cast<std::size_t>(n) * (static_cast<std::size_t>(d) + 1) * 4;
  if (buf.size() != expected)
    throw TruncationError("load_tensor_bin: payload length mismatch", expected, buf.size());
  Dataset ds;
  ds.k = static_cast<int>(k);
  ds.feature_dim = static_cast<int>(d);
  ds.provenance = "tensor_bin(" + path + ")";
  ds.samples.resize(n);
  std::size_t off = 20;
  for (std::uint32_t i = 0; i < n; ++i) {
    auto& s = ds.samples[i];
    s.x.resize(d);
    for (std::uint32_t j = 0; j < d; ++j) {
      const std::uint32_t bits = detail::get_u32(buf, off);
      off += 4;
      float f = 0.0f;
      std::memcpy(&f, &bits, 4);
      s.x[j] = static_cast<double>(f);
    }
    const std::uint32_t y = detail::get_u32(buf, off);
    off += 4;
    if (y >= k)
      throw FormatError("load_tensor_bin: record " + std::to_string(i) +
                        " has label " + std::to_string(y) + " >= k");
    s.y = static_cast<int>(y);
  }
  detail::fit_box(ds, 0.0);
  ds.validate();
  return ds;
}

}  // namespace gils
