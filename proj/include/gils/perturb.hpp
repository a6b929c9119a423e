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
#include <limits>
#include <string>

#include "gils/errors.hpp"
#include "gils/loss.hpp"
#include "gils/model.hpp"
#include "gils/numkit.hpp"

namespace gils {

/// Which variable the inner ascent moves. The default perturbs the raw input
/// and backpropagates the feature-space cost through the extractor; the
/// feature mode treats the feature vector itself as the variable and is used
/// for bound diagnostics.
enum class PerturbSpace { input, feature };

struct PerturbConfig {
  double gamma = 1e-3;   // transport penalty
  double eta = 1.5;      // fixed ascent step
  int steps = 5;         // T
  double alpha = 0.2;    // label smoothing used inside the inner loss
  bool hard_labels_inner = false;  // use alpha=0 labels in the inner loss
  PerturbSpace space = PerturbSpace::input;
  int max_steps = 100;

  void validate() const {
    if (!(gamma > 0.0)) throw ValidationError("perturb: gamma must be > 0");
    if (!(eta >= 0.0)) throw ValidationError("perturb: eta must be >= 0");
    if (steps < 1) throw ValidationError("perturb: steps must be >= 1");
    if (steps > max_steps)
      throw ValidationError("perturb: steps " + std::to_string(steps) +
                            " exceeds max " + std::to_string(max_steps));
    if (!(alpha >= 0.0 && alpha < 1.0))
      throw ValidationError("perturb: alpha must be in [0, 1)");
  }
};

struct PerturbResult {
  Vec x_perturbed;
  Vec objective_trace;            // length T+1: loss - gamma*cost per step
  double feature_displacement = 0.0;  // ||f(x*) - f(x0)||_2
  double bound_3l0_over_gamma = 0.0;  // filled in by displacement_check
};

/// Transport cost between two points: half the squared feature distance when
/// the labels agree, +infinity otherwise.
inline double transport_cost(const ModelParams& params, const Vec& x,
                             const Vec& x_anchor, bool same_label) {
  if (x.size() != x_anchor.size())
    throw DimensionError("transport_cost: input dims differ");
  if (!same_label) return std::numeric_limits<double>::infinity();
  const Vec za = forward(params, x).feature;
  const Vec zb = forward(params, x_anchor).feature;
  return 0.5 * l2_dist_sq(za, zb);
}

/// T fixed-step ascent iterations on (loss - gamma * cost) from x0. The label
/// never changes, so the infinite-cost branch of the transport metric is
/// structurally unreachable. Aborts with a diagnostic when the objective
/// turns non-finite (step size too large).
inline PerturbResult inner_maximize(const ModelParams& params, const Vec& x0,
                                    const SmoothedLabel& label,
                                    const PerturbConfig& cfg) {
  cfg.validate();
  const SmoothedLabel inner_label =
      cfg.hard_labels_inner ? hard_label(label.true_class, label.k()) : label;

  if (cfg.space == PerturbSpace::feature) {
    // z itself is the optimization variable; the extractor is bypassed.
    if (x0.size() != params.feature_dim())
      throw DimensionError("inner_maximize(feature): z dim mismatch");
    const Mat& theta_f = params.classifier;
    PerturbResult res;
    res.objective_trace.reserve(static_cast<std::size_t>(cfg.steps) + 1);
    Vec z = x0;
    auto objective = [&](const Vec& zz) {
      const double loss = ls_cross_entropy(softmax(matvec_transposed(theta_f, zz)), inner_label);
      return loss - cfg.gamma * 0.5 * l2_dist_sq(zz, x0);
    };
    res.objective_trace.push_back(objective(z));
    for (int t = 0; t < cfg.steps; ++t) {
      Vec g = feature_gradient(theta_f, z, inner_label.true_class, inner_label.alpha);
      for (std::size_t i = 0; i < z.size(); ++i)
        g[i] -= cfg.gamma * (z[i] - x0[i]);
      axpy(cfg.eta, g, z);
      const double obj = objective(z);
      if (!std::isfinite(obj))
        throw NumericError("inner_maximize: non-finite objective at step " +
                           std::to_string(t + 1) + "; eta may be too large");
      res.objective_trace.push_back(obj);
    }
    res.x_perturbed = z;
    res.feature_displacement = std::sqrt(l2_dist_sq(z, x0));
    return res;
  }

  if (x0.size() != params.input_dim())
    throw DimensionError("inner_maximize: input dim mismatch");
  const InnerObjective obj = make_inner_objective(params, x0, cfg.gamma, inner_label);
  PerturbResult res;
  res.objective_trace.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  Vec x = x0;
  auto objective_at = [&](const ForwardTrace& tr) {
    const double loss = ls_cross_entropy(tr.probs, inner_label);
    return loss - cfg.gamma * 0.5 * l2_dist_sq(tr.feature, obj.anchor_feature);
  };
  res.objective_trace.push_back(objective_at(forward(params, x)));
  for (int t = 0; t < cfg.steps; ++t) {
    const Vec g = grad_input(params, x, obj);
    axpy(cfg.eta, g, x);
    const ForwardTrace tr = forward(params, x);
    const double o = objective_at(tr);
    if (!std::isfinite(o))
      throw NumericError("inner_maximize: non-finite objective at step " +
                         std::to_string(t + 1) + "; eta may be too large");
    res.objective_trace.push_back(o);
    if (t == cfg.steps - 1)
      res.feature_displacement = std::sqrt(l2_dist_sq(tr.feature, obj.anchor_feature));
  }
  res.x_perturbed = std::move(x);
  return res;
}

/// Sampling estimate of the loss Lipschitz constant in feature space: 1.5x
/// the max feature-gradient norm over >= n_samples random (x, label) pairs
/// drawn uniformly from the given box.
inline double estimate_l0(const ModelParams& params, const Vec& box_min,
                          const Vec& box_max, double alpha, int n_samples,
                          std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("estimate_l0: n_samples must be >= 1");
  if (box_min.size() != params.input_dim() || box_max.size() != params.input_dim())
    throw DimensionError("estimate_l0: box dim mismatch");
  Rng rng(seed);
  const std::size_t k = params.class_count();
  double max_norm = 0.0;
  Vec x(params.input_dim());
  for (int s = 0; s < n_samples; ++s) {
    for (std::size_t d = 0; d < x.size(); ++d)
      x[d] = rng.uniform(box_min[d], box_max[d]);
    const auto cls = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(k) - 1));
    const Vec z = forward(params, x).feature;
    const Vec g = feature_gradient(params.classifier, z, cls, alpha);
    max_norm = std::max(max_norm, l2_norm(g));
  }
  return 1.5 * max_norm;
}

struct DisplacementCheck {
  bool pass = false;
  double margin = 0.0;  // bound - displacement; negative means violation
  double bound = 0.0;   // 3 * L0 / gamma
};

/// Checks the displacement diagnostic ||z'* - z'|| <= 3 L0 / gamma and
/// records the bound on the result.
inline DisplacementCheck displacement_check(PerturbResult& result,
                                            double l0_estimate, double gamma) {
  if (!(l0_estimate > 0.0))
    throw ValidationError("displacement_check: L0 estimate must be > 0");
  if (!(gamma > 0.0)) throw ValidationError("displacement_check: gamma must be > 0");
  DisplacementCheck chk;
  chk.bound = 3.0 * l0_estimate / gamma;
  chk.margin = chk.bound - result.feature_displacement;
  chk.pass = chk.margin >= 0.0;
  result.bound_3l0_over_gamma = chk.bound;
  return chk;
}

}  // namespace gils
