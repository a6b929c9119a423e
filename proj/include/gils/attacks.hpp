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
#include <string>

#include "gils/data.hpp"
#include "gils/errors.hpp"
#include "gils/model.hpp"
#include "gils/numkit.hpp"
#include "gils/trainer.hpp"

namespace gils {

enum class AttackKind { fgsm, pgd_linf, pgd_l2, cw_linf };

inline const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::pgd_linf: return "pgd_linf";
    case AttackKind::pgd_l2: return "pgd_l2";
    case AttackKind::cw_linf: return "cw_linf";
  }
  return "?";
}

inline AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "fgsm") return AttackKind::fgsm;
  if (s == "pgd_linf") return AttackKind::pgd_linf;
  if (s == "pgd_l2") return AttackKind::pgd_l2;
  if (s == "cw_linf") return AttackKind::cw_linf;
  throw ValidationError("unknown attack kind '" + s +
                        "' (expected fgsm|pgd_linf|pgd_l2|cw_linf)");
}

struct AttackConfig {
  AttackKind kind = AttackKind::fgsm;
  double epsilon = 8.0 / 225.0;
  int steps = 10;           // iterative kinds; step counts are reproduction-sensitive
  double step_size = 0.0;   // 0 means epsilon / 4
  double kappa = 0.0;       // margin clamp for the cw variant

  double effective_step() const { return step_size > 0.0 ? step_size : epsilon / 4.0; }

  void validate() const {
    if (epsilon < 0.0) throw ValidationError("attack: epsilon must be >= 0");
    if (steps < 1) throw ValidationError("attack: steps must be >= 1");
    if (kappa < 0.0) throw ValidationError("attack: kappa must be >= 0");
  }
};

/// Axis-aligned clipping box (the data domain).
struct DomainBox {
  Vec lo;
  Vec hi;

  static DomainBox of(const Dataset& ds) { return DomainBox{ds.box_min, ds.box_max}; }

  void clip(Vec& x) const {
    for (std::size_t d = 0; d < x.size(); ++d)
      x[d] = std::clamp(x[d], lo[d], hi[d]);
  }
};

namespace detail {

/// d/dx of the hard-label cross entropy at x.
inline Vec hard_loss_grad(const ModelParams& params, const Vec& x, int label) {
  const SmoothedLabel hard = hard_label(static_cast<std::size_t>(label),
                                        params.class_count());
  return grad_input(params, x, InnerObjective{Vec(params.feature_dim(), 0.0), 0.0, hard});
}

inline void project_linf(Vec& x, const Vec& center, double eps) {
  for (std::size_t d = 0; d < x.size(); ++d)
    x[d] = std::clamp(x[d], center[d] - eps, center[d] + eps);
}

inline void project_l2(Vec& x, const Vec& center, double eps) {
  const double dist = std::sqrt(l2_dist_sq(x, center));
  if (dist <= eps) return;
  const double scale = eps / dist;
  for (std::size_t d = 0; d < x.size(); ++d)
    x[d] = center[d] + (x[d] - center[d]) * scale;
}

}  // namespace detail

/// Single signed-gradient step of size eps, clipped to the domain box.
/// eps = 0 is the exact identity.
inline Vec fgsm(const ModelParams& params, const Vec& x, int label_hard,
                double eps, const DomainBox& box) {
  if (eps < 0.0) throw ValidationError("fgsm: epsilon must be >= 0");
  if (eps == 0.0) return x;
  const Vec g = detail::hard_loss_grad(params, x, label_hard);
  Vec adv = x;
  for (std::size_t d = 0; d < adv.size(); ++d)
    adv[d] += eps * (g[d] > 0.0 ? 1.0 : (g[d] < 0.0 ? -1.0 : 0.0));
  box.clip(adv);
  return adv;
}

/// Iterative ascent with per-step projection onto the epsilon ball around x
/// (L-inf or L2 depending on cfg.kind) and the domain box. Box clipping moves
/// each coordinate toward the center, so it never leaves the ball.
inline Vec pgd(const ModelParams& params, const Vec& x, int label_hard,
               const AttackConfig& cfg, const DomainBox& box) {
  cfg.validate();
  if (cfg.kind != AttackKind::pgd_linf && cfg.kind != AttackKind::pgd_l2)
    throw ValidationError("pgd: config kind must be pgd_linf or pgd_l2");
  if (cfg.epsilon == 0.0) return x;
  const bool linf = cfg.kind == AttackKind::pgd_linf;
  const double step = cfg.effective_step();
  Vec adv = x;
  for (int t = 0; t < cfg.steps; ++t) {
    const Vec g = detail::hard_loss_grad(params, adv, label_hard);
    if (linf) {
      for (std::size_t d = 0; d < adv.size(); ++d)
        adv[d] += step * (g[d] > 0.0 ? 1.0 : (g[d] < 0.0 ? -1.0 : 0.0));
      detail::project_linf(adv, x, cfg.epsilon);
    } else {
      const double gn = l2_norm(g);
      if (gn > 0.0) axpy(step / gn, g, adv);
      detail::project_l2(adv, x, cfg.epsilon);
    }
    box.clip(adv);
  }
  return adv;
}

/// Margin loss max(logit_true - max_{j != true} logit_j, -kappa) minimized by
/// signed-gradient descent inside the epsilon box around x. Returns the
/// iterate with the best (lowest) margin loss. Points already inside the
/// clamp region have zero gradient and stay put. This is a box-constrained
/// approximation of the cited attack, not the penalty-form original.
inline Vec cw_linf(const ModelParams& params, const Vec& x, int label_hard,
                   const AttackConfig& cfg, const DomainBox& box) {
  cfg.validate();
  if (cfg.epsilon == 0.0) return x;
  const auto true_class = static_cast<std::size_t>(label_hard);
  const double step = cfg.effective_step();

  auto margin_loss = [&](const Vec& pt, Vec* grad) {
    const ForwardTrace tr = forward(params, pt);
    std::size_t runner = true_class == 0 ? 1 : 0;
    for (std::size_t j = 0; j < tr.logits.size(); ++j) {
      if (j == true_class) continue;
      if (tr.logits[j] > tr.logits[runner]) runner = j;
    }
    const double margin = tr.logits[true_class] - tr.logits[runner];
    if (grad != nullptr) {
      if (margin <= -cfg.kappa) {
        grad->assign(pt.size(), 0.0);  // clamp active: flat region
      } else {
        // d(margin)/dz = theta_true - theta_runner, backpropagated.
        Vec dfeature(params.feature_dim());
        for (std::size_t r = 0; r < dfeature.size(); ++r)
          dfeature[r] = params.classifier(r, true_class) - params.classifier(r, runner);
        *grad = gils::detail::backprop_feature(params, tr, dfeature);
      }
    }
    return std::max(margin, -cfg.kappa);
  };

  Vec adv = x;
  Vec best = x;
  double best_loss = margin_loss(x, nullptr);
  Vec g(x.size());
  for (int t = 0; t < cfg.steps; ++t) {
    margin_loss(adv, &g);
    bool moved = false;
    for (std::size_t d = 0; d < adv.size(); ++d) {
      if (g[d] != 0.0) moved = true;
      adv[d] -= step * (g[d] > 0.0 ? 1.0 : (g[d] < 0.0 ? -1.0 : 0.0));
    }
    if (!moved) break;
    detail::project_linf(adv, x, cfg.epsilon);
    box.clip(adv);
    const double loss = margin_loss(adv, nullptr);
    if (loss < best_loss) {
      best_loss = loss;
      best = adv;
    }
  }
  return best;
}

/// Dispatch by configured kind.
inline Vec run_attack(const ModelParams& params, const Vec& x, int label_hard,
                      const AttackConfig& cfg, const DomainBox& box) {
  switch (cfg.kind) {
    case AttackKind::fgsm: return fgsm(params, x, label_hard, cfg.epsilon, box);
    case AttackKind::pgd_linf:
    case AttackKind::pgd_l2: return pgd(params, x, label_hard, cfg, box);
    case AttackKind::cw_linf: return cw_linf(params, x, label_hard, cfg, box);
  }
  throw ValidationError("run_attack: missing attack kind");
}

/// Mean top-1 accuracy after attacking every sample of the dataset.
inline double attacked_accuracy(const ModelParams& params, const Dataset& data,
                                const AttackConfig& cfg) {
  const DomainBox box = DomainBox::of(data);
  std::vector<int> hits(data.samples.size(), 0);
  parallel_for(data.samples.size(), [&](std::size_t i) {
    const auto& s = data.samples[i];
    const Vec adv = run_attack(params, s.x, s.y, cfg, box);
    hits[i] = predict(params, adv) == static_cast<std::size_t>(s.y) ? 1 : 0;
  });
  std::size_t total = 0;
  for (int h : hits) total += static_cast<std::size_t>(h);
  return static_cast<double>(total) / static_cast<double>(data.samples.size());
}

/// GI-LS training where every generated sample is additionally pushed through
/// the adversarial perturber before its update: the training set per epoch is
/// original + attack(generated). With epsilon = 0 this is exactly train_gils.
inline TrainResult attack_then_gils(const AttackConfig& cfg_attack,
                                    const GilsConfig& cfg_gils,
                                    const Dataset& data, ModelParams init,
                                    const Dataset* eval = nullptr) {
  cfg_attack.validate();
  const DomainBox box = DomainBox::of(data);
  GilsConfig cfg = cfg_gils;
  cfg.mode = TrainMode::attacked_gils;
  const SampleHook hook = [cfg_attack, box](const ModelParams& p, const Vec& generated,
                                            const Sample& original) {
    return run_attack(p, generated, original.y, cfg_attack, box);
  };
  return train(cfg, data, std::move(init), eval, hook);
}

}  // namespace gils
