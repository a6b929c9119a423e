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

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gils/errors.hpp"
#include "gils/fsio.hpp"
#include "gils/label.hpp"
#include "gils/numkit.hpp"

namespace gils {

/// One fully connected layer (weights out x in) followed by tanh.
struct DenseLayer {
  Mat w;
  Vec b;

  bool operator==(const DenseLayer&) const = default;
};

/// MLP feature extractor plus a linear classification layer.
///
/// The classifier matrix has shape t x k: column j holds the weight vector of
/// class j, so logits = classifier^T * feature. With no hidden layers the
/// feature map is the input itself.
struct ModelParams {
  std::vector<DenseLayer> hidden;
  Mat classifier;
  std::uint64_t init_seed = 0;

  std::size_t input_dim() const {
    return hidden.empty() ? classifier.rows() : hidden.front().w.cols();
  }
  std::size_t feature_dim() const { return classifier.rows(); }
  std::size_t class_count() const { return classifier.cols(); }

  void validate() const {
    if (classifier.cols() < 2)
      throw ValidationError("model: class count must be >= 2");
    std::size_t width = input_dim();
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      const auto& layer = hidden[i];
      if (layer.w.cols() != width)
        throw DimensionError("model: layer " + std::to_string(i) +
                             " expects input width " + std::to_string(layer.w.cols()) +
                             ", got " + std::to_string(width));
      if (layer.b.size() != layer.w.rows())
        throw DimensionError("model: layer " + std::to_string(i) + " bias size mismatch");
      if (!layer.w.finite() || !all_finite(layer.b))
        throw NumericError("model: non-finite parameter in layer " + std::to_string(i));
      width = layer.w.rows();
    }
    if (width != classifier.rows())
      throw DimensionError("model: classifier expects feature dim " +
                           std::to_string(classifier.rows()) + ", got " +
                           std::to_string(width));
    if (!classifier.finite())
      throw NumericError("model: non-finite classifier parameter");
  }

  bool operator==(const ModelParams& o) const {
    return hidden == o.hidden && classifier == o.classifier;
  }
};

/// Everything the forward pass computed, kept for backprop.
struct ForwardTrace {
  Vec input;
  std::vector<Vec> pre;   // per hidden layer: W a_prev + b
  std::vector<Vec> act;   // per hidden layer: tanh(pre)
  Vec feature;            // length t
  Vec logits;             // length k
  Vec probs;              // softmax(logits)
};

inline ForwardTrace forward(const ModelParams& params, const Vec& x) {
  if (x.size() != params.input_dim())
    throw DimensionError("forward: input dim " + std::to_string(x.size()) +
                         " != " + std::to_string(params.input_dim()));
  ForwardTrace tr;
  tr.input = x;
  const Vec* cur = &tr.input;
  tr.pre.reserve(params.hidden.size());
  tr.act.reserve(params.hidden.size());
  for (const auto& layer : params.hidden) {
    Vec p = matvec(layer.w, *cur);
    axpy(1.0, layer.b, p);
    Vec a(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) a[i] = std::tanh(p[i]);
    tr.pre.push_back(std::move(p));
    tr.act.push_back(std::move(a));
    cur = &tr.act.back();
  }
  tr.feature = *cur;
  tr.logits = matvec_transposed(params.classifier, tr.feature);
  tr.probs = softmax(tr.logits);
  return tr;
}

/// Gradients in the same shapes as the parameters they correspond to.
struct ParamGrads {
  std::vector<DenseLayer> hidden;
  Mat classifier;

  void scale(double s) {
    for (auto& layer : hidden) {
      for (auto& v : layer.w.data()) v *= s;
      for (auto& v : layer.b) v *= s;
    }
    for (auto& v : classifier.data()) v *= s;
  }

  void add(const ParamGrads& o) {
    for (std::size_t i = 0; i < hidden.size(); ++i) {
      for (std::size_t j = 0; j < hidden[i].w.data().size(); ++j)
        hidden[i].w.data()[j] += o.hidden[i].w.data()[j];
      axpy(1.0, o.hidden[i].b, hidden[i].b);
    }
    for (std::size_t j = 0; j < classifier.data().size(); ++j)
      classifier.data()[j] += o.classifier.data()[j];
  }

  double squared_norm() const {
    double acc = 0.0;
    for (const auto& layer : hidden) {
      for (double v : layer.w.data()) acc += v * v;
      for (double v : layer.b) acc += v * v;
    }
    for (double v : classifier.data()) acc += v * v;
    return acc;
  }
};

namespace detail {

/// Backpropagates a gradient w.r.t. the feature vector down to the input.
/// Returns d(objective)/d(input) and, when grads != nullptr, accumulates the
/// hidden-layer parameter gradients.
inline Vec backprop_feature(const ModelParams& params, const ForwardTrace& tr,
                            const Vec& dfeature, ParamGrads* grads = nullptr) {
  Vec da = dfeature;
  for (std::size_t li = params.hidden.size(); li-- > 0;) {
    const auto& layer = params.hidden[li];
    const Vec& a = tr.act[li];
    Vec dpre(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
      dpre[i] = da[i] * (1.0 - a[i] * a[i]);
    const Vec& layer_in = li == 0 ? tr.input : tr.act[li - 1];
    if (grads != nullptr) {
      auto& g = grads->hidden[li];
      for (std::size_t r = 0; r < layer.w.rows(); ++r)
        for (std::size_t c = 0; c < layer.w.cols(); ++c)
          g.w(r, c) += dpre[r] * layer_in[c];
      axpy(1.0, dpre, g.b);
    }
    da = matvec_transposed(layer.w, dpre);
  }
  return da;
}

inline ParamGrads zero_grads(const ModelParams& params) {
  ParamGrads g;
  g.hidden.reserve(params.hidden.size());
  for (const auto& layer : params.hidden)
    g.hidden.push_back({Mat(layer.w.rows(), layer.w.cols()), Vec(layer.b.size(), 0.0)});
  g.classifier = Mat(params.classifier.rows(), params.classifier.cols());
  return g;
}

}  // namespace detail

/// Gradient of the label-smoothed cross entropy w.r.t. every weight and bias.
inline ParamGrads grad_params(const ModelParams& params, const Vec& x,
                              const SmoothedLabel& label) {
  if (label.k() != params.class_count())
    throw DimensionError("grad_params: label size " + std::to_string(label.k()) +
                         " != class count " + std::to_string(params.class_count()));
  const ForwardTrace tr = forward(params, x);
  ParamGrads g = detail::zero_grads(params);
  Vec dlogits(tr.probs.size());
  for (std::size_t j = 0; j < dlogits.size(); ++j)
    dlogits[j] = tr.probs[j] - label.probs[j];
  for (std::size_t r = 0; r < params.classifier.rows(); ++r)
    for (std::size_t j = 0; j < params.classifier.cols(); ++j)
      g.classifier(r, j) = tr.feature[r] * dlogits[j];
  const Vec dfeature = matvec(params.classifier, dlogits);
  detail::backprop_feature(params, tr, dfeature, &g);
  return g;
}

/// The scalar objective maximized by the inner ascent: label-smoothed loss
/// minus gamma times the feature-space transport cost to a fixed anchor.
struct InnerObjective {
  Vec anchor_feature;
  double gamma = 0.0;
  SmoothedLabel label;
};

inline InnerObjective make_inner_objective(const ModelParams& params,
                                           const Vec& x_anchor, double gamma,
                                           const SmoothedLabel& label) {
  if (gamma < 0.0) throw ValidationError("inner objective: gamma must be >= 0");
  return InnerObjective{forward(params, x_anchor).feature, gamma, label};
}

/// d/dx of (ls_loss(x) - gamma * 0.5 * ||f(x) - anchor_feature||^2), with
/// full backprop through both terms.
inline Vec grad_input(const ModelParams& params, const Vec& x,
                      const InnerObjective& obj) {
  if (obj.gamma < 0.0) throw ValidationError("grad_input: gamma must be >= 0");
  if (obj.label.k() != params.class_count())
    throw DimensionError("grad_input: label/class count mismatch");
  if (obj.anchor_feature.size() != params.feature_dim())
    throw DimensionError("grad_input: anchor feature dim mismatch");
  const ForwardTrace tr = forward(params, x);
  Vec dlogits(tr.probs.size());
  for (std::size_t j = 0; j < dlogits.size(); ++j)
    dlogits[j] = tr.probs[j] - obj.label.probs[j];
  Vec dfeature = matvec(params.classifier, dlogits);
  for (std::size_t r = 0; r < dfeature.size(); ++r)
    dfeature[r] -= obj.gamma * (tr.feature[r] - obj.anchor_feature[r]);
  return detail::backprop_feature(params, tr, dfeature);
}

/// Fresh MLP with uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) init.
inline ModelParams make_mlp(std::size_t input_dim,
                            const std::vector<std::size_t>& hidden_widths,
                            std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("make_mlp: k must be >= 2");
  if (input_dim == 0) throw ValidationError("make_mlp: input_dim must be >= 1");
  Rng rng(seed);
  ModelParams params;
  params.init_seed = seed;
  std::size_t width = input_dim;
  for (std::size_t hw : hidden_widths) {
    if (hw == 0) throw ValidationError("make_mlp: zero hidden width");
    DenseLayer layer{Mat(hw, width), Vec(hw, 0.0)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(width));
    for (auto& v : layer.w.data()) v = rng.uniform(-bound, bound);
    for (auto& v : layer.b) v = rng.uniform(-bound, bound);
    params.hidden.push_back(std::move(layer));
    width = hw;
  }
  params.classifier = Mat(width, k);
  const double bound = 1.0 / std::sqrt(static_cast<double>(width));
  for (auto& v : params.classifier.data()) v = rng.uniform(-bound, bound);
  return params;
}

/// One SGD step: params -= rate * grads, with separate rates for the hidden
/// stack and the classification layer.
inline void apply_sgd_step(ModelParams& params, const ParamGrads& grads,
                           double rate_features, double rate_classifier) {
  for (std::size_t i = 0; i < params.hidden.size(); ++i) {
    auto& layer = params.hidden[i];
    const auto& g = grads.hidden[i];
    for (std::size_t j = 0; j < layer.w.data().size(); ++j)
      layer.w.data()[j] -= rate_features * g.w.data()[j];
    for (std::size_t j = 0; j < layer.b.size(); ++j)
      layer.b[j] -= rate_features * g.b[j];
  }
  for (std::size_t j = 0; j < params.classifier.data().size(); ++j)
    params.classifier.data()[j] -= rate_classifier * grads.classifier.data()[j];
}

// ---------------------------------------------------------------------------
// Checkpoint format: JSON with shortest round-trip float printing, so a
// save/load cycle reproduces every parameter bit for bit.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json mat_to_json(const Mat& m) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Mat mat_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw FormatError("checkpoint: matrix must be a non-empty array of arrays");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  Mat m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (j[i].size() != cols) throw FormatError("checkpoint: ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

}  // namespace detail

inline nlohmann::ordered_json model_to_json(const ModelParams& params) {
  params.validate();
  nlohmann::ordered_json j;
  nlohmann::ordered_json arch;
  arch["input"] = params.input_dim();
  nlohmann::ordered_json widths = nlohmann::ordered_json::array();
  for (const auto& layer : params.hidden) widths.push_back(layer.w.rows());
  arch["hidden"] = std::move(widths);
  arch["classes"] = params.class_count();
  j["arch"] = std::move(arch);
  j["seed"] = params.init_seed;
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& layer : params.hidden) {
    nlohmann::ordered_json lj;
    lj["w"] = detail::mat_to_json(layer.w);
    lj["b"] = layer.b;
    layers.push_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  j["classifier"] = detail::mat_to_json(params.classifier);
  return j;
}

inline ModelParams model_from_json(const nlohmann::json& j) {
  ModelParams params;
  try {
    params.init_seed = j.at("seed").get<std::uint64_t>();
    for (const auto& lj : j.at("layers")) {
      DenseLayer layer;
      layer.w = detail::mat_from_json(lj.at("w"));
      layer.b = lj.at("b").get<Vec>();
      params.hidden.push_back(std::move(layer));
    }
    params.classifier = detail::mat_from_json(j.at("classifier"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  params.validate();
  return params;
}

inline void save_model(const ModelParams& params, const std::string& path) {
  write_file_atomic(path, model_to_json(params).dump(2) + "\n");
}

inline ModelParams load_model(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace gils
