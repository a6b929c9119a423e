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
#include <optional>

#include "gils/errors.hpp"
#include "gils/label.hpp"
#include "gils/model.hpp"
#include "gils/numkit.hpp"

namespace gils {

/// Cross entropy -sum_i y_i log p_i against a smoothed label. Probabilities
/// are clamped at 1e-300 inside the log, which leaves every representable
/// probability untouched and only guards the exact-zero case.
inline double ls_cross_entropy(const Vec& probs, const SmoothedLabel& label) {
  if (probs.size() != label.k())
    throw DimensionError("ls_cross_entropy: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (label.probs[i] == 0.0) continue;
    acc -= label.probs[i] * std::log(std::max(probs[i], 1e-300));
  }
  return acc;
}

/// Gradient of the label-smoothed cross entropy w.r.t. the feature vector z,
/// in closed form:
///
///   g = sum_j p_j(z) theta_j - (1-alpha) theta_i - alpha/(k-1) sum_{j!=i} theta_j
///
/// where theta_j is column j of the classification matrix and p = softmax of
/// the logits at z. This is the ascent direction of the loss: adding +eta * g
/// to z increases the loss to first order. It equals grad_input restricted to
/// the feature layer.
inline Vec feature_gradient(const Mat& theta_f, const Vec& z,
                            std::size_t true_class, double alpha) {
  if (z.size() != theta_f.rows())
    throw DimensionError("feature_gradient: feature dim " + std::to_string(z.size()) +
                         " != " + std::to_string(theta_f.rows()));
  const std::size_t k = theta_f.cols();
  const SmoothedLabel label = smooth_labels(true_class, k, alpha);
  const Vec probs = softmax(matvec_transposed(theta_f, z));
  Vec residual(k);
  for (std::size_t j = 0; j < k; ++j) residual[j] = probs[j] - label.probs[j];
  return matvec(theta_f, residual);
}

/// Lipschitz-style constant of the classification layer:
/// L(theta) = (sum_j ||theta_j||_2) * max_j ||theta_j||_2.
inline double lipschitz_constant(const Mat& theta_f) {
  double sum = 0.0;
  double max_norm = 0.0;
  for (std::size_t j = 0; j < theta_f.cols(); ++j) {
    double sq = 0.0;
    for (std::size_t r = 0; r < theta_f.rows(); ++r) sq += theta_f(r, j) * theta_f(r, j);
    const double n = std::sqrt(sq);
    sum += n;
    max_norm = std::max(max_norm, n);
  }
  return sum * max_norm;
}

/// The surrogate worst-case loss at one sample, together with the quantities
/// that bound it.
///
///   surrogate = ls_loss + (1/gamma) ||g||^2
///   lower     = ls_loss + ||g||^2 / (gamma + L)   (only when gamma > L)
///   upper     = ls_loss + ||g||^2 / (gamma - L)   (only when gamma > L)
///
/// with g the closed-form feature gradient and L = lipschitz_constant.
struct SurrogateReport {
  double ls_loss = 0.0;
  Vec grad_feature;
  double penalty = 0.0;
  double surrogate = 0.0;
  double lipschitz = 0.0;
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;

  bool bounds_available() const { return lower_bound.has_value(); }
};

/// Assembles a report from precomputed parts. Exposed so feature-space
/// callers (which have z directly) can skip the extractor.
inline SurrogateReport surrogate_at_feature(const Mat& theta_f, const Vec& z,
                                            const SmoothedLabel& label,
                                            double gamma) {
  if (gamma <= 0.0) throw ValidationError("surrogate: gamma must be > 0");
  SurrogateReport rep;
  const Vec probs = softmax(matvec_transposed(theta_f, z));
  rep.ls_loss = ls_cross_entropy(probs, label);
  rep.grad_feature = feature_gradient(theta_f, z, label.true_class, label.alpha);
  const double gsq = dot(rep.grad_feature, rep.grad_feature);
  rep.penalty = gsq / gamma;
  rep.surrogate = rep.ls_loss + rep.penalty;
  rep.lipschitz = lipschitz_constant(theta_f);
  if (gamma > rep.lipschitz) {
    rep.lower_bound = rep.ls_loss + gsq / (gamma + rep.lipschitz);
    rep.upper_bound = rep.ls_loss + gsq / (gamma - rep.lipschitz);
  }
  return rep;
}

/// Surrogate report for an input-space sample: runs the feature extractor,
/// then evaluates the closed forms at the resulting feature.
inline SurrogateReport surrogate(const ModelParams& params, const Vec& x,
                                 const SmoothedLabel& label, double gamma) {
  if (label.k() != params.class_count())
    throw DimensionError("surrogate: label/class count mismatch");
  const ForwardTrace tr = forward(params, x);
  return surrogate_at_feature(params.classifier, tr.feature, label, gamma);
}

}  // namespace gils
