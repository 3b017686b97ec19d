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

#include <cstddef>
#include <functional>
#include <random>
#include <utility>

#include "stratclass/common.hpp"

namespace stratclass {

// ---------------------------------------------------------------------------
// Dense vector arithmetic. All 64-bit floating point; dimensions are small
// enough that precision matters more than speed.
// ---------------------------------------------------------------------------

inline double dot(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec sub(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "sub");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vec add(const Vec& a, const Vec& b) {
  require_same_dim(a, b, "add");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vec scaled(const Vec& a, double alpha) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = alpha * a[i];
  return r;
}

/// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  require_same_dim(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline double distance(const Vec& a, const Vec& b) { return norm(sub(a, b)); }

// ---------------------------------------------------------------------------
// Row-major dense matrix. No decompositions, no sparsity; the models only
// need products against vectors.
// ---------------------------------------------------------------------------

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vec data;  // row-major, rows*cols entries

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  Vec row(std::size_t i) const {
    return Vec(data.begin() + static_cast<std::ptrdiff_t>(i * cols),
               data.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols));
  }
};

/// A * v
inline Vec matvec(const Matrix& a, const Vec& v) {
  if (a.cols != v.size()) throw std::invalid_argument("matvec: dimension mismatch");
  Vec r(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a.data[i * a.cols + j] * v[j];
    r[i] = s;
  }
  return r;
}

/// A^T * v
inline Vec matvec_t(const Matrix& a, const Vec& v) {
  if (a.rows != v.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
  Vec r(a.cols, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) r[j] += a.data[i * a.cols + j] * v[i];
  }
  return r;
}

// ---------------------------------------------------------------------------
// Deterministic randomness. mt19937_64 has a standard-specified output
// stream, and the mappings below avoid std distributions (whose streams are
// implementation-defined), so identical seeds give identical values on every
// platform.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; pairs are cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

  /// Independent stream for a worker: seed-splitting by offset.
  Rng split(std::uint64_t worker_index) const { return Rng(seed_ + worker_index); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient oracle. Central differences; step 1e-5 balances
// truncation against round-off on unit-variance features. Ground truth for
// every analytic gradient in the library.
// ---------------------------------------------------------------------------

inline Vec finite_diff_grad(const std::function<double(const Vec&)>& fn, const Vec& x,
                            double step = 1e-5) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_grad: step must be positive");
  require_finite(x, "finite_diff_grad");
  Vec g(x.size(), 0.0);
  Vec probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    double fp = fn(probe);
    probe[i] = x[i] - step;
    double fm = fn(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite evaluation at coordinate " +
                         std::to_string(i));
    }
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

/// Relative error used by every gradient check: ||g - ref|| / max(1, ||g||).
inline double gradient_rel_err(const Vec& g, const Vec& ref) {
  return distance(g, ref) / std::max(1.0, norm(g));
}

}  // namespace stratclass
