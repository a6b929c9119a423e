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

#include <cstddef>

#include "gils/errors.hpp"
#include "gils/numkit.hpp"

namespace gils {

/// A label-smoothed target distribution: 1-alpha on the true class and
/// alpha/(k-1) on each of the others. alpha = 0 gives the hard one-hot label.
struct SmoothedLabel {
  Vec probs;
  std::size_t true_class = 0;
  double alpha = 0.0;

  std::size_t k() const { return probs.size(); }
};

inline SmoothedLabel smooth_labels(std::size_t true_class, std::size_t k,
                                   double alpha) {
  if (k < 2) throw ValidationError("smooth_labels: k must be >= 2");
  if (true_class >= k)
    throw ValidationError("smooth_labels: true_class out of range");
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw ValidationError("smooth_labels: alpha must be in [0, 1)");
  SmoothedLabel lab;
  lab.true_class = true_class;
  lab.alpha = alpha;
  lab.probs.assign(k, alpha / static_cast<double>(k - 1));
  lab.probs[true_class] = 1.0 - alpha;
  // Pin the sum to exactly 1 by absorbing rounding into one off-class entry.
  double sum = 0.0;
  for (double p : lab.probs) sum += p;
  const std::size_t adjust = true_class == k - 1 ? 0 : k - 1;
  lab.probs[adjust] += 1.0 - sum;
  return lab;
}

inline SmoothedLabel hard_label(std::size_t true_class, std::size_t k) {
  return smooth_labels(true_class, k, 0.0);
}

}  // namespace gils
