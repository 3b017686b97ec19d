// Copyright 2026 The stratclass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "stratclass/numerics.hpp"

namespace stratclass {

// Manipulation cost c(x, z). Zero at z = x, nonnegative, subadditive.
// Euclidean distance is the default; squared Euclidean matches the quadratic
// cost used by the linear closed form in earlier work.

enum class CostKind { kEuclidean, kSquaredEuclidean };

struct CostFn {
  CostKind kind = CostKind::kEuclidean;
  // Smoothing for the euclidean gradient only; the exact gradient is singular
  // at z = x. Feasibility checks and reporting always use the exact cost.
  double smoothing = 1e-8;
};

/// Exact cost, no smoothing.
inline double cost(const CostFn& cfn, const Vec& x, const Vec& z) {
  require_same_dim(x, z, "cost");
  double sq = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = z[i] - x[i];
    sq += d * d;
  }
  return cfn.kind == CostKind::kEuclidean ? std::sqrt(sq) : sq;
}

/// Gradient of the cost in z. Euclidean uses (z-x)/sqrt(||z-x||^2 + delta^2),
/// which vanishes at z = x instead of blowing up.
inline Vec cost_grad_z(const CostFn& cfn, const Vec& x, const Vec& z) {
  require_same_dim(x, z, "cost_grad_z");
  Vec g(x.size());
  if (cfn.kind == CostKind::kSquaredEuclidean) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = 2.0 * (z[i] - x[i]);
    return g;
  }
  double sq = cfn.smoothing * cfn.smoothing;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = z[i] - x[i];
    sq += d * d;
  }
  double inv = 1.0 / std::sqrt(sq);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = (z[i] - x[i]) * inv;
  return g;
}

}  // namespace stratclass
