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

#include <fstream>
#include <map>
#include <sstream>
#include <variant>

#include "stratclass/numerics.hpp"

namespace stratclass {

// Three differentiable score-model families. The classifier is always
// f(x) = sgn(h(x)) with sgn(0) = +1, so the decision boundary itself counts
// as positive.

struct LinearModel {
  Vec w;
  double b = 0.0;
};

/// Fully connected net, tanh on hidden layers, identity output.
struct MlpModel {
  std::vector<std::size_t> sizes;  // [d, h1, ..., 1]
  std::vector<Matrix> weights;     // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Vec> biases;
};

/// Input-convex net: softplus hidden activations, identity output,
/// unconstrained input-passthrough weights at every layer, nonnegative
/// hidden-to-hidden weights. Nonnegativity is enforced by icnn_project, and
/// together with the convex nondecreasing activation it makes z -> h(z)
/// convex.
struct IcnnModel {
  std::vector<std::size_t> sizes;     // [d, h1, ..., 1]
  std::vector<Matrix> input_weights;  // input_weights[l]: sizes[l+1] x d
  std::vector<Matrix> hidden_weights; // hidden_weights[l]: sizes[l+1] x sizes[l], l >= 1 (entry 0 unused)
  std::vector<Vec> biases;
};

using ScoreModel = std::variant<LinearModel, MlpModel, IcnnModel>;

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

inline double softplus(double t) {
  return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t)));
}

inline double logistic(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  double e = std::exp(t);
  return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Dimensions and family tags
// ---------------------------------------------------------------------------

inline std::size_t input_dim(const ScoreModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) return m.w.size();
        else return m.sizes.front();
      },
      model);
}

inline std::string model_family(const ScoreModel& model) {
  if (std::holds_alternative<LinearModel>(model)) return "linear";
  if (std::holds_alternative<MlpModel>(model)) return "mlp";
  return "icnn";
}

inline void check_input(const ScoreModel& model, const Vec& x, const char* what) {
  if (x.size() != input_dim(model)) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(x.size()) + " vs model input " +
                                std::to_string(input_dim(model)) + ")");
  }
  require_finite(x, what);
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

namespace detail {

struct MlpTrace {
  std::vector<Vec> act;  // act[l], act[0] = x
  std::vector<Vec> pre;  // pre[l] = W[l] act[l] + b[l]
};

inline MlpTrace mlp_forward(const MlpModel& m, const Vec& x) {
  MlpTrace t;
  t.act.push_back(x);
  const std::size_t layers = m.weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Vec s = matvec(m.weights[l], t.act.back());
    axpy(1.0, m.biases[l], s);
    t.pre.push_back(s);
    if (l + 1 < layers) {
      Vec a(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) a[i] = std::tanh(s[i]);
      t.act.push_back(std::move(a));
    } else {
      t.act.push_back(std::move(s));
    }
  }
  return t;
}

struct IcnnTrace {
  std::vector<Vec> act;  // act[l], l >= 1 hidden activations; act[0] = x
  std::vector<Vec> pre;  // pre[l] for layer l (pre-activation)
};

inline IcnnTrace icnn_forward(const IcnnModel& m, const Vec& x) {
  IcnnTrace t;
  t.act.push_back(x);
  const std::size_t layers = m.input_weights.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Vec s = matvec(m.input_weights[l], x);
    axpy(1.0, m.biases[l], s);
    if (l >= 1) {
      Vec hz = matvec(m.hidden_weights[l], t.act.back());
      axpy(1.0, hz, s);
    }
    t.pre.push_back(s);
    if (l + 1 < layers) {
      Vec a(s.size());
      for (std::size_t i = 0; i < s.size(); ++i) a[i] = softplus(s[i]);
      t.act.push_back(std::move(a));
    } else {
      t.act.push_back(std::move(s));
    }
  }
  return t;
}

}  // namespace detail

/// h(x).
inline double score(const ScoreModel& model, const Vec& x) {
  check_input(model, x, "score");
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          return dot(m.w, x) + m.b;
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          return detail::mlp_forward(m, x).act.back()[0];
        } else {
          return detail::icnn_forward(m, x).act.back()[0];
        }
      },
      model);
}

/// f(x) = sgn(h(x)) with the boundary counted positive.
inline int classify(const ScoreModel& model, const Vec& x) {
  return score(model, x) >= 0.0 ? +1 : -1;
}

// ---------------------------------------------------------------------------
// Flat parameter layout. Order is the serialization order below:
//   linear: w, b
//   mlp:    W0, b0, W1, b1, ...
//   icnn:   Wx0, b0, Wz1, Wx1, b1, Wz2, Wx2, b2, ...
// Matrices are row-major.
// ---------------------------------------------------------------------------

inline std::size_t param_count(const ScoreModel& model) {
  return std::visit(
      [](const auto& m) -> std::size_t {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          return m.w.size() + 1;
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          std::size_t n = 0;
          for (std::size_t l = 0; l < m.weights.size(); ++l)
            n += m.weights[l].data.size() + m.biases[l].size();
          return n;
        } else {
          std::size_t n = 0;
          for (std::size_t l = 0; l < m.input_weights.size(); ++l) {
            if (l >= 1) n += m.hidden_weights[l].data.size();
            n += m.input_weights[l].data.size() + m.biases[l].size();
          }
          return n;
        }
      },
      model);
}

inline Vec get_params(const ScoreModel& model) {
  Vec out;
  out.reserve(param_count(model));
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        auto push = [&](const Vec& v) { out.insert(out.end(), v.begin(), v.end()); };
        if constexpr (std::is_same_v<T, LinearModel>) {
          push(m.w);
          out.push_back(m.b);
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          for (std::size_t l = 0; l < m.weights.size(); ++l) {
            push(m.weights[l].data);
            push(m.biases[l]);
          }
        } else {
          for (std::size_t l = 0; l < m.input_weights.size(); ++l) {
            if (l >= 1) push(m.hidden_weights[l].data);
            push(m.input_weights[l].data);
            push(m.biases[l]);
          }
        }
      },
      model);
  return out;
}

inline void set_params(ScoreModel& model, const Vec& p) {
  if (p.size() != param_count(model)) {
    throw std::invalid_argument("set_params: parameter count mismatch");
  }
  std::size_t pos = 0;
  std::visit(
      [&](auto& m) {
        using T = std::decay_t<decltype(m)>;
        auto take = [&](Vec& v) {
          std::copy(p.begin() + static_cast<std::ptrdiff_t>(pos),
                    p.begin() + static_cast<std::ptrdiff_t>(pos + v.size()), v.begin());
          pos += v.size();
        };
        if constexpr (std::is_same_v<T, LinearModel>) {
          take(m.w);
          m.b = p[pos++];
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          for (std::size_t l = 0; l < m.weights.size(); ++l) {
            take(m.weights[l].data);
            take(m.biases[l]);
          }
        } else {
          for (std::size_t l = 0; l < m.input_weights.size(); ++l) {
            if (l >= 1) take(m.hidden_weights[l].data);
            take(m.input_weights[l].data);
            take(m.biases[l]);
          }
        }
      },
      model);
}

// ---------------------------------------------------------------------------
// Reverse-mode gradients
// ---------------------------------------------------------------------------

struct Backprop {
  double score = 0.0;
  Vec input_grad;   // dh/dx
  Vec param_grad;   // dh/dtheta in flat layout
};

/// One reverse-mode sweep giving h(x), dh/dx and dh/dtheta.
inline Backprop backprop(const ScoreModel& model, const Vec& x) {
  check_input(model, x, "backprop");
  Backprop out;
  out.param_grad.assign(param_count(model), 0.0);

  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    out.score = dot(lin->w, x) + lin->b;
    out.input_grad = lin->w;
    std::copy(x.begin(), x.end(), out.param_grad.begin());  // dh/dw = x
    out.param_grad.back() = 1.0;                            // dh/db
    return out;
  }

  if (const auto* mlp = std::get_if<MlpModel>(&model)) {
    const auto t = detail::mlp_forward(*mlp, x);
    const std::size_t layers = mlp->weights.size();
    out.score = t.act.back()[0];
    // Flat offsets per layer.
    std::vector<std::size_t> offset(layers);
    std::size_t pos = 0;
    for (std::size_t l = 0; l < layers; ++l) {
      offset[l] = pos;
      pos += mlp->weights[l].data.size() + mlp->biases[l].size();
    }
    Vec delta(1, 1.0);  // d h / d pre[last]
    for (std::size_t l = layers; l-- > 0;) {
      const Matrix& w = mlp->weights[l];
      const Vec& a = t.act[l];
      double* dw = out.param_grad.data() + offset[l];
      double* db = dw + w.data.size();
      for (std::size_t i = 0; i < w.rows; ++i) {
        for (std::size_t j = 0; j < w.cols; ++j) dw[i * w.cols + j] = delta[i] * a[j];
        db[i] = delta[i];
      }
      Vec da = matvec_t(w, delta);
      if (l > 0) {
        const Vec& act = t.act[l];  // tanh outputs of layer l-1 feed act[l]
        delta.assign(act.size(), 0.0);
        for (std::size_t i = 0; i < act.size(); ++i) delta[i] = da[i] * (1.0 - act[i] * act[i]);
      } else {
        out.input_grad = std::move(da);
      }
    }
    return out;
  }

  const auto& icnn = std::get<IcnnModel>(model);
  const auto t = detail::icnn_forward(icnn, x);
  const std::size_t layers = icnn.input_weights.size();
  out.score = t.act.back()[0];
  out.input_grad.assign(x.size(), 0.0);
  std::vector<std::size_t> offset(layers);
  std::size_t pos = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offset[l] = pos;
    if (l >= 1) pos += icnn.hidden_weights[l].data.size();
    pos += icnn.input_weights[l].data.size() + icnn.biases[l].size();
  }
  Vec delta(1, 1.0);
  for (std::size_t l = layers; l-- > 0;) {
    std::size_t at = offset[l];
    if (l >= 1) {
      const Matrix& wz = icnn.hidden_weights[l];
      const Vec& u = t.act[l];
      double* dwz = out.param_grad.data() + at;
      for (std::size_t i = 0; i < wz.rows; ++i)
        for (std::size_t j = 0; j < wz.cols; ++j) dwz[i * wz.cols + j] = delta[i] * u[j];
      at += wz.data.size();
    }
    const Matrix& wx = icnn.input_weights[l];
    double* dwx = out.param_grad.data() + at;
    double* db = dwx + wx.data.size();
    for (std::size_t i = 0; i < wx.rows; ++i) {
      for (std::size_t j = 0; j < wx.cols; ++j) dwx[i * wx.cols + j] = delta[i] * x[j];
      db[i] = delta[i];
    }
    axpy(1.0, matvec_t(wx, delta), out.input_grad);
    if (l >= 1) {
      Vec du = matvec_t(icnn.hidden_weights[l], delta);
      const Vec& pre = t.pre[l - 1];
      delta.assign(pre.size(), 0.0);
      for (std::size_t i = 0; i < pre.size(); ++i) delta[i] = du[i] * logistic(pre[i]);
    }
  }
  return out;
}

/// dh/dx by reverse-mode accumulation.
inline Vec input_grad(const ScoreModel& model, const Vec& x) {
  return backprop(model, x).input_grad;
}

/// Gradient of upstream * h(x) with respect to every parameter, flat layout.
inline Vec param_grad(const ScoreModel& model, const Vec& x, double upstream) {
  if (!std::isfinite(upstream)) throw NumericError("param_grad: non-finite upstream");
  if (upstream == 0.0) return Vec(param_count(model), 0.0);
  Vec g = backprop(model, x).param_grad;
  for (double& v : g) v *= upstream;
  return g;
}

/// Clamp every hidden-to-hidden weight entry to be nonnegative. Restores the
/// convexity invariant after a gradient update.
inline void icnn_project(IcnnModel& m) {
  for (std::size_t l = 1; l < m.hidden_weights.size(); ++l) {
    for (double& v : m.hidden_weights[l].data) v = std::max(v, 0.0);
  }
}

inline void project_if_icnn(ScoreModel& model) {
  if (auto* icnn = std::get_if<IcnnModel>(&model)) icnn_project(*icnn);
}

// ---------------------------------------------------------------------------
// Construction. Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)], seeded;
// ICNN models are projected once at construction so the convexity invariant
// holds from the start.
// ---------------------------------------------------------------------------

namespace detail {

inline void fill_uniform(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.data) v = rng.uniform(-bound, bound);
}

inline void fill_uniform(Vec& v, double bound, Rng& rng) {
  for (double& x : v) x = rng.uniform(-bound, bound);
}

}  // namespace detail

inline LinearModel make_linear(std::size_t dim, Rng& rng) {
  if (dim == 0) throw std::invalid_argument("make_linear: dimension must be positive");
  LinearModel m;
  m.w.resize(dim);
  double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  detail::fill_uniform(m.w, bound, rng);
  m.b = rng.uniform(-bound, bound);
  return m;
}

inline MlpModel make_mlp(const std::vector<std::size_t>& sizes, Rng& rng) {
  if (sizes.size() < 2 || sizes.back() != 1)
    throw std::invalid_argument("make_mlp: sizes must chain to a single output");
  MlpModel m;
  m.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    Matrix w(sizes[l + 1], sizes[l]);
    Vec b(sizes[l + 1]);
    double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    detail::fill_uniform(w, bound, rng);
    detail::fill_uniform(b, bound, rng);
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }
  return m;
}

inline IcnnModel make_icnn(const std::vector<std::size_t>& sizes, Rng& rng) {
  if (sizes.size() < 2 || sizes.back() != 1)
    throw std::invalid_argument("make_icnn: sizes must chain to a single output");
  IcnnModel m;
  m.sizes = sizes;
  const std::size_t d = sizes.front();
  m.hidden_weights.resize(sizes.size() - 1);  // entry 0 stays empty
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (l >= 1) {
      Matrix wz(sizes[l + 1], sizes[l]);
      detail::fill_uniform(wz, 1.0 / std::sqrt(static_cast<double>(sizes[l])), rng);
      m.hidden_weights[l] = std::move(wz);
    }
    Matrix wx(sizes[l + 1], d);
    Vec b(sizes[l + 1]);
    double bound = 1.0 / std::sqrt(static_cast<double>(d));
    detail::fill_uniform(wx, bound, rng);
    detail::fill_uniform(b, bound, rng);
    m.input_weights.push_back(std::move(wx));
    m.biases.push_back(std::move(b));
  }
  icnn_project(m);
  return m;
}

/// family is one of "linear", "mlp", "icnn". hidden lists the hidden layer
/// widths (ignored for linear).
inline ScoreModel make_model(const std::string& family, std::size_t dim,
                             const std::vector<std::size_t>& hidden, Rng& rng) {
  if (family == "linear") return make_linear(dim, rng);
  std::vector<std::size_t> sizes;
  sizes.push_back(dim);
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  if (family == "mlp") return make_mlp(sizes, rng);
  if (family == "icnn") return make_icnn(sizes, rng);
  throw ConfigError("make_model: unknown family '" + family + "'");
}

// ---------------------------------------------------------------------------
// Serialization. Flat text: a header line with the family tag and layer
// sizes, then one `key = numbers` line per parameter block. Numbers use
// shortest round-trip rendering, so save/load is bit-identical.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_values(std::ostream& os, const std::string& key, const Vec& v) {
  os << key << " =";
  for (double x : v) os << ' ' << format_double(x);
  os << '\n';
}

}  // namespace detail

inline void save_model(const ScoreModel& model, std::ostream& os) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, LinearModel>) {
          os << "linear " << m.w.size() << '\n';
          detail::write_values(os, "w", m.w);
          detail::write_values(os, "b", Vec{m.b});
        } else if constexpr (std::is_same_v<T, MlpModel>) {
          os << "mlp";
          for (std::size_t s : m.sizes) os << ' ' << s;
          os << '\n';
          for (std::size_t l = 0; l < m.weights.size(); ++l) {
            detail::write_values(os, "W" + std::to_string(l), m.weights[l].data);
            detail::write_values(os, "b" + std::to_string(l), m.biases[l]);
          }
        } else {
          os << "icnn";
          for (std::size_t s : m.sizes) os << ' ' << s;
          os << '\n';
          for (std::size_t l = 0; l < m.input_weights.size(); ++l) {
            if (l >= 1)
              detail::write_values(os, "Wz" + std::to_string(l), m.hidden_weights[l].data);
            detail::write_values(os, "Wx" + std::to_string(l), m.input_weights[l].data);
            detail::write_values(os, "b" + std::to_string(l), m.biases[l]);
          }
        }
      },
      model);
}

inline void save_model(const ScoreModel& model, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DataError("save_model: cannot open '" + path + "'");
  save_model(model, os);
  if (!os) throw DataError("save_model: write failed for '" + path + "'");
}

inline ScoreModel load_model(std::istream& is) {
  std::string line;
  std::string header;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) {
      header = line;
      break;
    }
  }
  if (header.empty()) throw DataError("load_model: empty model file");
  std::istringstream hs(header);
  std::string family;
  hs >> family;
  std::vector<std::size_t> sizes;
  std::size_t s;
  while (hs >> s) sizes.push_back(s);

  std::map<std::string, Vec> blocks;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("load_model: malformed line '" + line + "'");
    std::string key = line.substr(0, eq);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    Vec values;
    std::istringstream vs(line.substr(eq + 1));
    std::string tok;
    while (vs >> tok) values.push_back(parse_double(tok, "load_model"));
    blocks[key] = std::move(values);
  }

  auto fetch = [&](const std::string& key, std::size_t expected) -> Vec {
    auto it = blocks.find(key);
    if (it == blocks.end()) throw DataError("load_model: missing block '" + key + "'");
    if (it->second.size() != expected) {
      throw DataError("load_model: block '" + key + "' has " +
                      std::to_string(it->second.size()) + " values, expected " +
                      std::to_string(expected));
    }
    return it->second;
  };

  if (family == "linear") {
    if (sizes.size() != 1) throw DataError("load_model: bad linear header");
    LinearModel m;
    m.w = fetch("w", sizes[0]);
    m.b = fetch("b", 1)[0];
    return m;
  }
  if (family == "mlp") {
    if (sizes.size() < 2 || sizes.back() != 1) throw DataError("load_model: bad mlp header");
    MlpModel m;
    m.sizes = sizes;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      Matrix w(sizes[l + 1], sizes[l]);
      w.data = fetch("W" + std::to_string(l), w.data.size());
      m.weights.push_back(std::move(w));
      m.biases.push_back(fetch("b" + std::to_string(l), sizes[l + 1]));
    }
    return m;
  }
  if (family == "icnn") {
    if (sizes.size() < 2 || sizes.back() != 1) throw DataError("load_model: bad icnn header");
    IcnnModel m;
    m.sizes = sizes;
    const std::size_t d = sizes.front();
    m.hidden_weights.resize(sizes.size() - 1);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
      if (l >= 1) {
        Matrix wz(sizes[l + 1], sizes[l]);
        wz.data = fetch("Wz" + std::to_string(l), wz.data.size());
        m.hidden_weights[l] = std::move(wz);
      }
      Matrix wx(sizes[l + 1], d);
      wx.data = fetch("Wx" + std::to_string(l), wx.data.size());
      m.input_weights.push_back(std::move(wx));
      m.biases.push_back(fetch("b" + std::to_string(l), sizes[l + 1]));
    }
    return m;
  }
  throw DataError("load_model: unknown family '" + family + "'");
}

inline ScoreModel load_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("load_model: cannot open '" + path + "'");
  return load_model(is);
}

}  // namespace stratclass
