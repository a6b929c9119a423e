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
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gils/errors.hpp"
#include "gils/numkit.hpp"

namespace gils {

/// Matern 5/2 covariance: variance * (1 + sqrt5 r/l + 5r^2/(3l^2)) exp(-sqrt5 r/l).
inline double matern52(double r, double lengthscale, double variance) {
  if (!(lengthscale > 0.0)) throw ValidationError("matern52: lengthscale must be > 0");
  if (!(variance > 0.0)) throw ValidationError("matern52: variance must be > 0");
  if (r < 0.0) throw ValidationError("matern52: r must be >= 0");
  constexpr double sqrt5 = 2.23606797749978969640917366873;
  const double s = sqrt5 * r / lengthscale;
  return variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

// ---------------------------------------------------------------------------
// Hyperparameter search space: alpha in [0, 0.5], T in {1..15},
// eta in [1.5, 3.0], epochs in {21..60}. Points live in the unit 4-cube;
// integer dimensions are continuous-relaxed and rounded at evaluation.
// ---------------------------------------------------------------------------

struct GilsPoint {
  double alpha = 0.0;
  int T = 1;
  double eta = 1.5;
  int epochs = 21;
};

struct SearchSpace {
  double alpha_lo = 0.0, alpha_hi = 0.5;
  int t_lo = 1, t_hi = 15;
  double eta_lo = 1.5, eta_hi = 3.0;
  int epochs_lo = 21, epochs_hi = 60;

  GilsPoint decode(const Vec& u) const {
    if (u.size() != 4) throw DimensionError("SearchSpace::decode: point must be 4-d");
    for (double v : u)
      if (!(v >= 0.0 && v <= 1.0))
        throw ValidationError("SearchSpace::decode: point outside unit cube");
    GilsPoint p;
    p.alpha = alpha_lo + (alpha_hi - alpha_lo) * u[0];
    p.T = t_lo + static_cast<int>(std::lround(u[1] * (t_hi - t_lo)));
    p.eta = eta_lo + (eta_hi - eta_lo) * u[2];
    p.epochs = epochs_lo + static_cast<int>(std::lround(u[3] * (epochs_hi - epochs_lo)));
    return p;
  }

  Vec encode(const GilsPoint& p) const {
    validate(p);
    return Vec{(p.alpha - alpha_lo) / (alpha_hi - alpha_lo),
               static_cast<double>(p.T - t_lo) / static_cast<double>(t_hi - t_lo),
               (p.eta - eta_lo) / (eta_hi - eta_lo),
               static_cast<double>(p.epochs - epochs_lo) /
                   static_cast<double>(epochs_hi - epochs_lo)};
  }

  void validate(const GilsPoint& p) const {
    if (!(p.alpha >= alpha_lo && p.alpha <= alpha_hi))
      throw ValidationError("search space: alpha out of bounds");
    if (p.T < t_lo || p.T > t_hi)
      throw ValidationError("search space: T out of bounds");
    if (!(p.eta >= eta_lo && p.eta <= eta_hi))
      throw ValidationError("search space: eta out of bounds");
    if (p.epochs < epochs_lo || p.epochs > epochs_hi)
      throw ValidationError("search space: epochs out of bounds");
  }
};

/// One evaluated configuration. The recorded point is the unit-cube encoding
/// of the rounded (actually evaluated) configuration. timestamp is the
/// logical evaluation index, which keeps persisted traces reproducible.
struct Trial {
  int index = 0;
  Vec point;
  GilsPoint config;
  std::optional<double> objective;  // empty for failed evaluations
  std::uint64_t seed = 0;
  int timestamp = 0;

  bool failed() const { return !objective.has_value(); }
};

// ---------------------------------------------------------------------------
// Gaussian-process posterior with a Matern 5/2 kernel on unit-cube points.
// Targets are standardized internally; predictions are de-standardized.
// ---------------------------------------------------------------------------

namespace detail {

/// In-place Cholesky LL^T of a dense symmetric matrix stored row-major.
/// Returns false if a pivot is not strictly positive.
inline bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double sum = a[i * n + j];
      for (std::size_t p = 0; p < j; ++p) sum -= a[i * n + p] * a[j * n + p];
      if (i == j) {
        if (sum <= 0.0) return false;
        a[i * n + j] = std::sqrt(sum);
      } else {
        a[i * n + j] = sum / a[j * n + j];
      }
    }
    for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = 0.0;
  }
  return true;
}

inline Vec solve_lower(const std::vector<double>& l, std::size_t n, const Vec& b) {
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = b[i];
    for (std::size_t j = 0; j < i; ++j) sum -= l[i * n + j] * x[j];
    x[i] = sum / l[i * n + i];
  }
  return x;
}

inline Vec solve_lower_transposed(const std::vector<double>& l, std::size_t n,
                                  const Vec& b) {
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double sum = b[i];
    for (std::size_t j = i + 1; j < n; ++j) sum -= l[j * n + i] * x[j];
    x[i] = sum / l[i * n + i];
  }
  return x;
}

inline double norm_cdf(double u) { return 0.5 * std::erfc(-u / 1.4142135623730950488); }

inline double norm_pdf(double u) {
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return inv_sqrt_2pi * std::exp(-0.5 * u * u);
}

}  // namespace detail

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // clamped at 0
};

struct GpPosterior {
  std::vector<Vec> points;
  Vec targets;        // raw objectives, fit order
  double y_mean = 0.0;
  double y_std = 1.0;
  Vec lengthscale;    // per dimension (isotropic fit: all equal)
  double variance = 1.0;
  double noise = 1e-6;
  std::vector<double> chol;  // lower Cholesky factor of K + noise I
  Vec alpha;                 // (K + noise I)^-1 y_standardized

  GpPrediction predict(const Vec& x) const {
    const std::size_t n = points.size();
    Vec kstar(n);
    for (std::size_t i = 0; i < n; ++i)
      kstar[i] = matern52(std::sqrt(l2_dist_sq(x, points[i])), lengthscale[0], variance);
    GpPrediction pred;
    double mu_std = 0.0;
    for (std::size_t i = 0; i < n; ++i) mu_std += kstar[i] * alpha[i];
    pred.mean = mu_std * y_std + y_mean;
    const Vec v = detail::solve_lower(chol, n, kstar);
    double var_std = variance - dot(v, v);
    if (var_std < 0.0) var_std = 0.0;
    pred.variance = var_std * y_std * y_std;
    return pred;
  }
};

/// Fits a GP to the completed trials. The lengthscale is selected by log
/// marginal likelihood over the grid {0.1, 0.2, ..., 2.0}; the noise term
/// starts at 1e-6 and escalates tenfold (up to 1e-2) if the covariance fails
/// to factorize.
inline GpPosterior gp_fit(const std::vector<Trial>& trials) {
  std::vector<Vec> points;
  Vec targets;
  for (const auto& t : trials) {
    if (t.failed()) continue;
    points.push_back(t.point);
    targets.push_back(*t.objective);
  }
  const std::size_t n = points.size();
  if (n < 2) throw ValidationError("gp_fit: need at least 2 completed trials");

  double mean = 0.0;
  for (double y : targets) mean += y;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double y : targets) var += (y - mean) * (y - mean);
  double sd = std::sqrt(var / static_cast<double>(n));
  if (sd < 1e-12) sd = 1.0;  // constant objective: leave targets at zero
  Vec y_std(n);
  for (std::size_t i = 0; i < n; ++i) y_std[i] = (targets[i] - mean) / sd;

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist[i * n + j] = dist[j * n + i] = std::sqrt(l2_dist_sq(points[i], points[j]));

  GpPosterior best;
  double best_lml = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (int li = 1; li <= 20; ++li) {
    const double ell = 0.1 * li;
    for (double jitter = 1e-6; jitter <= 1e-2 * (1.0 + 1e-12); jitter *= 10.0) {
      std::vector<double> k(n * n);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          k[i * n + j] = matern52(dist[i * n + j], ell, 1.0) + (i == j ? jitter : 0.0);
      if (!detail::cholesky(k, n)) continue;
      const Vec tmp = detail::solve_lower(k, n, y_std);
      const Vec alpha = detail::solve_lower_transposed(k, n, tmp);
      double lml = -0.5 * dot(y_std, alpha);
      for (std::size_t i = 0; i < n; ++i) lml -= std::log(k[i * n + i]);
      lml -= 0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846);
      if (lml > best_lml) {
        best_lml = lml;
        best.points = points;
        best.targets = targets;
        best.y_mean = mean;
        best.y_std = sd;
        best.lengthscale.assign(points.front().size(), ell);
        best.variance = 1.0;
        best.noise = jitter;
        best.chol = std::move(k);
        best.alpha = alpha;
      }
      any = true;
      break;  // this lengthscale factorized; no need for more jitter
    }
  }
  if (!any)
    throw NumericError("gp_fit: covariance singular for every lengthscale "
                       "after jitter escalation to 1e-2");
  return best;
}

/// Closed-form expected improvement for maximization. Zero when the
/// prediction is deterministic and does not beat the incumbent.
inline double expected_improvement(const GpPosterior& post, const Vec& x,
                                   double incumbent) {
  const GpPrediction pred = post.predict(x);
  const double sigma = std::sqrt(pred.variance);
  const double diff = pred.mean - incumbent;
  if (sigma <= 0.0) return std::max(diff, 0.0);
  const double u = diff / sigma;
  return diff * detail::norm_cdf(u) + sigma * detail::norm_pdf(u);
}

namespace detail {

inline double radical_inverse(unsigned base, unsigned index) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * (index % base);
    index /= base;
    f /= base;
  }
  return result;
}

/// Halton point with a seeded Cranley-Patterson rotation: low-discrepancy
/// coverage whose layout still varies with the seed.
inline Vec halton_point(int index, std::size_t dims, const Vec& shift) {
  static constexpr unsigned bases[] = {2, 3, 5, 7, 11, 13};
  Vec u(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    double v = radical_inverse(bases[d], static_cast<unsigned>(index) + 1) + shift[d];
    v -= std::floor(v);
    u[d] = std::min(v, std::nextafter(1.0, 0.0));
    if (u[d] < 0.0) u[d] = 0.0;
  }
  return u;
}

/// EI maximization: 1024 random candidates followed by 20 rounds of
/// coordinate descent with a shrinking step.
inline Vec maximize_ei(const GpPosterior& post, double incumbent, Rng& rng,
                       std::size_t dims) {
  Vec best(dims);
  double best_ei = -1.0;
  Vec cand(dims);
  for (int c = 0; c < 1024; ++c) {
    for (std::size_t d = 0; d < dims; ++d) cand[d] = rng.uniform();
    const double ei = expected_improvement(post, cand, incumbent);
    if (ei > best_ei) {
      best_ei = ei;
      best = cand;
    }
  }
  double delta = 0.1;
  for (int step = 0; step < 20; ++step) {
    bool improved = false;
    for (std::size_t d = 0; d < dims; ++d) {
      for (double sign : {+1.0, -1.0}) {
        Vec probe = best;
        probe[d] = std::clamp(probe[d] + sign * delta, 0.0, 1.0);
        const double ei = expected_improvement(post, probe, incumbent);
        if (ei > best_ei) {
          best_ei = ei;
          best = probe;
          improved = true;
        }
      }
    }
    if (!improved) delta *= 0.5;
  }
  return best;
}

}  // namespace detail

struct BoResult {
  Trial best;
  std::vector<Trial> trials;
  Vec incumbent_trace;  // best objective after each evaluation
};

using BoObjective = std::function<double(const GilsPoint&, std::uint64_t seed)>;

/// Sequential single-point Bayesian optimization: n_init rotated-Halton
/// points, then n_iter EI-maximizing points. Failed evaluations are kept in
/// the trace but excluded from the surrogate fit. Passing previously
/// completed trials resumes the run without re-evaluating them; the schedule
/// is reproduced because all randomness is derived from (seed, index).
inline BoResult bo_search(const BoObjective& objective, const SearchSpace& space,
                          int n_init, int n_iter, std::uint64_t seed,
                          std::vector<Trial> prior_trials = {}) {
  if (n_init < 1) throw ValidationError("bo_search: n_init must be >= 1");
  if (n_iter < 0) throw ValidationError("bo_search: n_iter must be >= 0");
  const std::size_t dims = 4;
  const int total = n_init + n_iter;
  if (static_cast<int>(prior_trials.size()) > total)
    throw ValidationError("bo_search: more prior trials than planned evaluations");

  Vec shift(dims);
  {
    Rng shift_rng(seed);
    for (auto& s : shift) s = shift_rng.uniform();
  }

  BoResult res;
  res.trials = std::move(prior_trials);
  double incumbent = -std::numeric_limits<double>::infinity();
  for (const auto& t : res.trials) {
    if (!t.failed()) incumbent = std::max(incumbent, *t.objective);
    res.incumbent_trace.push_back(incumbent);
  }

  for (int i = static_cast<int>(res.trials.size()); i < total; ++i) {
    Vec u;
    std::size_t completed = 0;
    for (const auto& t : res.trials) completed += t.failed() ? 0u : 1u;
    if (i < n_init || completed < 2) {
      u = detail::halton_point(i, dims, shift);
    } else {
      const GpPosterior post = gp_fit(res.trials);
      Rng cand_rng(seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1)));
      u = detail::maximize_ei(post, incumbent, cand_rng, dims);
    }
    Trial tr;
    tr.index = i;
    tr.config = space.decode(u);
    tr.point = space.encode(tr.config);  // snapped to the rounded config
    tr.seed = seed;
    tr.timestamp = i;
    try {
      tr.objective = objective(tr.config, seed);
      if (!std::isfinite(*tr.objective))
        throw NumericError("bo_search: objective returned a non-finite value");
    } catch (const std::exception&) {
      tr.objective.reset();
    }
    if (!tr.failed()) incumbent = std::max(incumbent, *tr.objective);
    res.incumbent_trace.push_back(incumbent);
    res.trials.push_back(std::move(tr));
  }

  const Trial* best = nullptr;
  for (const auto& t : res.trials)
    if (!t.failed() && (best == nullptr || *t.objective > *best->objective)) best = &t;
  if (best == nullptr) throw NumericError("bo_search: every evaluation failed");
  res.best = *best;
  return res;
}

}  // namespace gils
