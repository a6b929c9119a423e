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
#include <cstring>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "gils/data.hpp"
#include "gils/errors.hpp"
#include "gils/loss.hpp"
#include "gils/model.hpp"
#include "gils/perturb.hpp"

namespace gils {

enum class TrainMode { gils, erm, erm_ls, attacked_gils };

inline const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::gils: return "gils";
    case TrainMode::erm: return "erm";
    case TrainMode::erm_ls: return "erm_ls";
    case TrainMode::attacked_gils: return "attacked_gils";
  }
  return "?";
}

inline TrainMode train_mode_from_string(const std::string& s) {
  if (s == "gils") return TrainMode::gils;
  if (s == "erm") return TrainMode::erm;
  if (s == "erm_ls") return TrainMode::erm_ls;
  if (s == "attacked_gils") return TrainMode::attacked_gils;
  throw ValidationError("unknown train mode '" + s + "'");
}

struct GilsConfig {
  PerturbConfig perturb;
  int epochs = 30;
  double beta_classifier = 1e-2;
  double beta_features = 1e-3;
  double decay = 0.3;     // learning-rate factor applied every decay_every epochs
  int decay_every = 20;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::gils;
  bool parallel_inner = false;

  void validate() const {
    perturb.validate();
    if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
    if (!(beta_classifier > 0.0)) throw ValidationError("train: beta_classifier must be > 0");
    if (!(beta_features > 0.0)) throw ValidationError("train: beta_features must be > 0");
    if (!(decay > 0.0 && decay <= 1.0)) throw ValidationError("train: decay must be in (0, 1]");
    if (decay_every < 1) throw ValidationError("train: decay_every must be >= 1");
  }
};

struct EpochRecord {
  int epoch = 0;             // 1-based
  double train_loss = 0.0;   // mean loss over the epoch's updates
  double msq_grad = 0.0;     // mean ||grad of the surrogate update||^2
  double test_accuracy = 0.0;
  double mean_displacement = 0.0;
  double max_displacement = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  Vec convergence_series;  // running mean of msq_grad up to each epoch
  std::uint64_t params_checksum = 0;
  double mean_displacement = 0.0;
  double max_displacement = 0.0;

  bool operator==(const TrainReport&) const = default;
};

struct TrainResult {
  ModelParams params;
  TrainReport report;
};

/// Transform applied to each generated sample before its update; used to
/// chain adversarial perturbers after the inner ascent.
using SampleHook = std::function<Vec(const ModelParams&, const Vec& x_generated,
                                     const Sample& original)>;

inline std::size_t predict(const ModelParams& params, const Vec& x) {
  const Vec probs = forward(params, x).probs;
  return static_cast<std::size_t>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
}

inline double evaluate_accuracy(const ModelParams& params, const Dataset& data) {
  if (data.samples.empty()) throw ValidationError("evaluate_accuracy: empty dataset");
  std::size_t hits = 0;
  for (const auto& s : data.samples)
    if (predict(params, s.x) == static_cast<std::size_t>(s.y)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(data.samples.size());
}

/// FNV-1a over the raw bit patterns of every parameter, in storage order.
inline std::uint64_t params_checksum(const ModelParams& params) {
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](double v) {
    std::uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto& layer : params.hidden) {
    for (double v : layer.w.data()) mix(v);
    for (double v : layer.b) mix(v);
  }
  for (double v : params.classifier.data()) mix(v);
  return h;
}

/// Runs the two-stage training loop. Every mode shares the same outer
/// structure -- per sample, one descent step on the generated sample followed
/// by one on the original -- so the baselines differ from the full method
/// only in how the generated sample is produced:
///
///   gils          inner ascent generates it
///   attacked_gils inner ascent, then the hook (an adversarial perturber)
///   erm / erm_ls  the original sample stands in for it
///
/// erm uses hard labels; every other mode smooths with perturb.alpha.
/// Updates use beta_classifier on the classification layer and beta_features
/// on the hidden stack, both decayed by `decay` every `decay_every` epochs.
inline TrainResult train(const GilsConfig& cfg, const Dataset& data,
                         ModelParams init, const Dataset* eval = nullptr,
                         const SampleHook& hook = {}) {
  cfg.validate();
  data.validate();
  init.validate();
  if (static_cast<std::size_t>(data.k) != init.class_count())
    throw ValidationError("train: dataset k=" + std::to_string(data.k) +
                          " != model classes " + std::to_string(init.class_count()));
  if (static_cast<std::size_t>(data.feature_dim) != init.input_dim())
    throw ValidationError("train: dataset dim != model input dim");
  if (cfg.mode == TrainMode::attacked_gils && !hook)
    throw ValidationError("train: attacked_gils requires a sample hook");

  const bool perturbs = cfg.mode == TrainMode::gils || cfg.mode == TrainMode::attacked_gils;
  const double label_alpha = cfg.mode == TrainMode::erm ? 0.0 : cfg.perturb.alpha;

  ModelParams params = std::move(init);
  TrainResult out;
  out.report.epochs.reserve(static_cast<std::size_t>(cfg.epochs));
  out.report.convergence_series.reserve(static_cast<std::size_t>(cfg.epochs));

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  double running_msq_sum = 0.0;
  double disp_sum = 0.0;
  std::size_t disp_count = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr_factor = std::pow(cfg.decay, epoch / cfg.decay_every);
    const double beta_c = cfg.beta_classifier * lr_factor;
    const double beta_f = cfg.beta_features * lr_factor;
    rng.shuffle(order);

    // With parallel_inner the whole epoch's perturbations are generated up
    // front against the epoch-start parameters; otherwise each sample is
    // perturbed against the current parameters, as the update order implies.
    std::vector<Vec> pregenerated;
    if (perturbs && cfg.parallel_inner) {
      pregenerated.resize(data.samples.size());
      const ModelParams& snapshot = params;
      parallel_for(order.size(), [&](std::size_t oi) {
        const Sample& s = data.samples[order[oi]];
        const SmoothedLabel lab =
            smooth_labels(static_cast<std::size_t>(s.y),
                          static_cast<std::size_t>(data.k), label_alpha);
        pregenerated[oi] = inner_maximize(snapshot, s.x, lab, cfg.perturb).x_perturbed;
      });
    }

    EpochRecord rec;
    rec.epoch = epoch + 1;
    double loss_sum = 0.0;
    double msq_sum = 0.0;
    double epoch_disp_sum = 0.0;
    double epoch_disp_max = 0.0;

    for (std::size_t oi = 0; oi < order.size(); ++oi) {
      const Sample& s = data.samples[order[oi]];
      const SmoothedLabel label =
          smooth_labels(static_cast<std::size_t>(s.y),
                        static_cast<std::size_t>(data.k), label_alpha);

      Vec generated;
      if (perturbs) {
        if (cfg.parallel_inner) {
          generated = pregenerated[oi];
          const double disp = std::sqrt(l2_dist_sq(forward(params, generated).feature,
                                                   forward(params, s.x).feature));
          epoch_disp_sum += disp;
          epoch_disp_max = std::max(epoch_disp_max, disp);
        } else {
          PerturbResult pr = inner_maximize(params, s.x, label, cfg.perturb);
          generated = std::move(pr.x_perturbed);
          epoch_disp_sum += pr.feature_displacement;
          epoch_disp_max = std::max(epoch_disp_max, pr.feature_displacement);
        }
        if (hook) generated = hook(params, generated, s);
      } else {
        generated = s.x;
      }

      // First update: the generated sample (the surrogate-loss gradient).
      {
        const ForwardTrace tr = forward(params, generated);
        const double loss = ls_cross_entropy(tr.probs, label);
        if (!std::isfinite(loss))
          throw NumericError("train: non-finite loss at epoch " +
                             std::to_string(epoch + 1) + ", sample " +
                             std::to_string(order[oi]) + " (generated)");
        const ParamGrads g = grad_params(params, generated, label);
        msq_sum += g.squared_norm();
        loss_sum += loss;
        apply_sgd_step(params, g, beta_f, beta_c);
      }
      // Second update: the original sample.
      {
        const ForwardTrace tr = forward(params, s.x);
        const double loss = ls_cross_entropy(tr.probs, label);
        if (!std::isfinite(loss))
          throw NumericError("train: non-finite loss at epoch " +
                             std::to_string(epoch + 1) + ", sample " +
                             std::to_string(order[oi]) + " (original)");
        const ParamGrads g = grad_params(params, s.x, label);
        loss_sum += loss;
        apply_sgd_step(params, g, beta_f, beta_c);
      }
    }

    const auto n = static_cast<double>(order.size());
    rec.train_loss = loss_sum / (2.0 * n);
    rec.msq_grad = msq_sum / n;
    if (perturbs) {
      rec.mean_displacement = epoch_disp_sum / n;
      rec.max_displacement = epoch_disp_max;
    }
    disp_sum += epoch_disp_sum;
    disp_count += order.size();
    out.report.max_displacement = std::max(out.report.max_displacement, rec.max_displacement);
    rec.test_accuracy = evaluate_accuracy(params, eval != nullptr ? *eval : data);

    running_msq_sum += rec.msq_grad;
    out.report.convergence_series.push_back(running_msq_sum / static_cast<double>(epoch + 1));
    out.report.epochs.push_back(rec);
  }

  out.report.mean_displacement = disp_count == 0 ? 0.0 : disp_sum / static_cast<double>(disp_count);
  out.report.params_checksum = params_checksum(params);
  out.params = std::move(params);
  return out;
}

inline TrainResult train_gils(const GilsConfig& cfg, const Dataset& data,
                              ModelParams init, const Dataset* eval = nullptr,
                              const SampleHook& hook = {}) {
  GilsConfig c = cfg;
  if (c.mode != TrainMode::attacked_gils) c.mode = TrainMode::gils;
  return train(c, data, std::move(init), eval, hook);
}

/// Plain SGD baseline sharing the outer update structure; hard labels by
/// default, smoothed when the config says erm_ls.
inline TrainResult train_erm(const GilsConfig& cfg, const Dataset& data,
                             ModelParams init, const Dataset* eval = nullptr) {
  GilsConfig c = cfg;
  if (c.mode != TrainMode::erm_ls) c.mode = TrainMode::erm;
  return train(c, data, std::move(init), eval);
}

struct ConvergenceSummary {
  double initial_msq_grad = 0.0;
  double final_msq_grad = 0.0;
  double ratio = 0.0;
  double loglog_slope = 0.0;  // slope of log(running mean) vs log(epoch)
};

/// Summarizes the decay of the running-mean squared gradient norm. Requires
/// at least 5 epochs of data.
inline ConvergenceSummary convergence_metrics(const TrainReport& report) {
  const Vec& series = report.convergence_series;
  if (series.size() < 5)
    throw ValidationError("convergence_metrics: need >= 5 epochs, have " +
                          std::to_string(series.size()));
  ConvergenceSummary s;
  s.initial_msq_grad = series.front();
  s.final_msq_grad = series.back();
  s.ratio = (s.initial_msq_grad == 0.0 && s.final_msq_grad == 0.0)
                ? 1.0
                : s.final_msq_grad / s.initial_msq_grad;
  // Least-squares slope of log(series) against log(epoch index).
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto n = static_cast<double>(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double x = std::log(static_cast<double>(i + 1));
    const double y = std::log(std::max(series[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  s.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return s;
}

inline nlohmann::ordered_json epoch_to_json(const EpochRecord& rec,
                                            double running_msq) {
  nlohmann::ordered_json j;
  j["epoch"] = rec.epoch;
  j["train_loss"] = rec.train_loss;
  j["msq_grad"] = rec.msq_grad;
  j["running_msq_grad"] = running_msq;
  j["test_accuracy"] = rec.test_accuracy;
  j["mean_displacement"] = rec.mean_displacement;
  j["max_displacement"] = rec.max_displacement;
  return j;
}

/// One JSON record per epoch, newline terminated.
inline std::string report_to_jsonl(const TrainReport& report) {
  std::string out;
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    out += epoch_to_json(report.epochs[i], report.convergence_series[i]).dump();
    out += '\n';
  }
  return out;
}

}  // namespace gils
