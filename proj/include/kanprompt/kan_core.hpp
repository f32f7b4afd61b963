/* Copyright 2026 The kanprompt Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Kolmogorov-Arnold network layers with B-spline edge activations.
//
// Every edge (q, p) of a layer carries its own univariate function
//
//   phi_{q,p}(x) = w_b * silu(x) + sum_j c_j * B_j(clamp(x, lo, hi))
//
// and output q of the layer is the row sum sum_p phi_{q,p}(z_p). Layers
// compose left to right. All routines are templates over the scalar type so
// that gradient checks can run in double while training runs in float.

#ifndef KANPROMPT_KAN_CORE_HPP_
#define KANPROMPT_KAN_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "kanprompt/errors.hpp"
#include "kanprompt/random.hpp"

namespace kanprompt::kan {

// Dense row-major matrix, used for basis tables.
template <std::floating_point T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const T> row(std::size_t r) const {
    return std::span<const T>(data).subspan(r * cols, cols);
  }
};

template <std::floating_point T>
T silu(T x) {
  return x / (T(1) + std::exp(-x));
}

template <std::floating_point T>
T silu_derivative(T x) {
  const T s = T(1) / (T(1) + std::exp(-x));
  return s * (T(1) + x * (T(1) - s));
}

// Knot vector of a spline basis. The knots extend `order` steps beyond the
// domain on each side, so that every point of [lo, hi] sees a full set of
// order + 1 nonzero basis functions.
template <std::floating_point T>
class SplineGrid {
 public:
  static constexpr int kMaxOrder = 7;

  SplineGrid(std::vector<T> knots, int order, T lo, T hi)
      : knots_(std::move(knots)), order_(order), lo_(lo), hi_(hi) {
    if (order_ < 1 || order_ > kMaxOrder) {
      throw InvalidArgument("spline order must be in [1, 7], got " +
                            std::to_string(order_));
    }
    if (!(lo_ < hi_)) throw InvalidArgument("spline domain needs lo < hi");
    if (knots_.size() < static_cast<std::size_t>(2 * order_ + 2)) {
      throw InvalidArgument("too few knots for spline order");
    }
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (!(knots_[i] > knots_[i - 1])) {
        throw InvalidArgument("spline knots must be strictly increasing");
      }
    }
    const std::size_t first = order_;
    const std::size_t last = knots_.size() - 1 - order_;
    if (knots_[first] > lo_ || knots_[last] < hi_) {
      throw InvalidArgument("interior knots do not cover the spline domain");
    }
    basis_count_ = knots_.size() - order_ - 1;
  }

  // `intervals` equal cells over [lo, hi], extended by `order` cells per side.
  static SplineGrid uniform(int intervals, int order, T lo, T hi) {
    if (intervals < 1) throw InvalidArgument("spline grid needs >= 1 interval");
    if (!(lo < hi)) throw InvalidArgument("spline domain needs lo < hi");
    const T h = (hi - lo) / static_cast<T>(intervals);
    std::vector<T> knots;
    knots.reserve(intervals + 2 * order + 1);
    for (int i = -order; i <= intervals + order; ++i) {
      knots.push_back(i == intervals ? hi : lo + static_cast<T>(i) * h);
    }
    return SplineGrid(std::move(knots), order, lo, hi);
  }

  int order() const { return order_; }
  T lo() const { return lo_; }
  T hi() const { return hi_; }
  std::size_t basis_count() const { return basis_count_; }
  std::span<const T> knots() const { return knots_; }

  // Evaluates the order + 1 basis functions that are nonzero at clamp(x) and
  // their derivatives with respect to x. Returns the index of the first one.
  // Outside [lo, hi] the clamped function is flat, so derivatives are zero.
  std::size_t local_basis(T x, std::span<T> values, std::span<T> derivs) const {
    const bool inside = x >= lo_ && x <= hi_;
    const T xc = std::clamp(x, lo_, hi_);
    const std::size_t p = order_;
    // Knot span: knots_[span] <= xc < knots_[span + 1], right-closed at hi.
    const std::size_t last_span = knots_.size() - 2 - p;
    std::size_t span = static_cast<std::size_t>(
        std::upper_bound(knots_.begin() + p, knots_.begin() + last_span + 1, xc) -
        knots_.begin() - 1);
    span = std::clamp(span, p, last_span);

    // Triangular evaluation of the nonzero basis functions, degree by degree.
    T left[kMaxOrder + 1];
    T right[kMaxOrder + 1];
    T lower[kMaxOrder + 1];  // degree p - 1 values, for the derivative.
    values[0] = T(1);
    for (std::size_t d = 1; d <= p; ++d) {
      if (d == p) std::copy_n(values.begin(), p, lower);
      left[d] = xc - knots_[span + 1 - d];
      right[d] = knots_[span + d] - xc;
      T saved = T(0);
      for (std::size_t r = 0; r < d; ++r) {
        const T temp = values[r] / (right[r + 1] + left[d - r]);
        values[r] = saved + right[r + 1] * temp;
        saved = left[d - r] * temp;
      }
      values[d] = saved;
    }
    const std::size_t first = span - p;
    for (std::size_t r = 0; r <= p; ++r) {
      if (!inside) {
        derivs[r] = T(0);
        continue;
      }
      const std::size_t j = first + r;
      T d = T(0);
      if (r >= 1) {
        d += static_cast<T>(p) * lower[r - 1] / (knots_[j + p] - knots_[j]);
      }
      if (r < p) {
        d -= static_cast<T>(p) * lower[r] / (knots_[j + p + 1] - knots_[j + 1]);
      }
      derivs[r] = d;
    }
    return first;
  }

 private:
  std::vector<T> knots_;
  int order_;
  T lo_;
  T hi_;
  std::size_t basis_count_ = 0;
};

// Basis table: row r, column j holds B_j(clamp(x_r)).
template <std::floating_point T>
Matrix<T> bspline_basis(std::span<const T> x, const SplineGrid<T>& grid) {
  Matrix<T> out(x.size(), grid.basis_count());
  T values[SplineGrid<T>::kMaxOrder + 1];
  T derivs[SplineGrid<T>::kMaxOrder + 1];
  const std::size_t width = grid.order() + 1;
  for (std::size_t r = 0; r < x.size(); ++r) {
    if (!std::isfinite(x[r])) {
      std::ostringstream msg;
      msg << "bspline_basis: non-finite input " << x[r] << " at index " << r;
      throw InvalidArgument(msg.str());
    }
    const std::size_t first = grid.local_basis(x[r], {values, width}, {derivs, width});
    for (std::size_t j = 0; j < width; ++j) out(r, first + j) = values[j];
  }
  return out;
}

// Borrowed view of one edge activation.
template <std::floating_point T>
struct KanEdgeView {
  T base_weight;
  std::span<const T> coefficients;
  const SplineGrid<T>& grid;
};

// A standalone edge activation phi(x) = w_b * silu(x) + spline(x).
template <std::floating_point T>
struct KanEdgeFunction {
  T base_weight = T(1);
  std::vector<T> coefficients;
  std::shared_ptr<const SplineGrid<T>> grid;

  KanEdgeView<T> view() const { return {base_weight, coefficients, *grid}; }
};

template <std::floating_point T>
std::vector<T> kan_edge_eval(std::span<const T> x, const KanEdgeView<T>& edge) {
  if (edge.coefficients.size() != edge.grid.basis_count()) {
    throw StructuralError("kan_edge_eval: " +
                          std::to_string(edge.coefficients.size()) +
                          " coefficients for a basis of size " +
                          std::to_string(edge.grid.basis_count()));
  }
  T values[SplineGrid<T>::kMaxOrder + 1];
  T derivs[SplineGrid<T>::kMaxOrder + 1];
  const std::size_t width = edge.grid.order() + 1;
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw InvalidArgument("kan_edge_eval: non-finite input");
    const std::size_t first = edge.grid.local_basis(x[i], {values, width}, {derivs, width});
    T spline = T(0);
    for (std::size_t j = 0; j < width; ++j) spline += edge.coefficients[first + j] * values[j];
    out[i] = edge.base_weight * silu(x[i]) + spline;
  }
  return out;
}

template <std::floating_point T>
std::vector<T> kan_edge_eval(std::span<const T> x, const KanEdgeFunction<T>& edge) {
  return kan_edge_eval(x, edge.view());
}

// One layer Phi as borrowed storage: base weights are n_out x n_in and
// coefficients are n_out x n_in x basis_count, both row-major, so edge (q, p)
// lives at index q * n_in + p.
template <std::floating_point T>
struct KanLayerView {
  std::size_t n_in = 0;
  std::size_t n_out = 0;
  const SplineGrid<T>* grid = nullptr;
  std::span<const T> base_weights;
  std::span<const T> coefficients;

  void validate() const {
    if (grid == nullptr) throw StructuralError("KAN layer has no grid");
    if (n_in == 0 || n_out == 0) throw StructuralError("KAN layer needs n_in, n_out >= 1");
    if (base_weights.size() != n_in * n_out) {
      throw StructuralError("KAN layer base weights: expected " +
                            std::to_string(n_out) + "x" + std::to_string(n_in) +
                            ", got " + std::to_string(base_weights.size()));
    }
    if (coefficients.size() != n_in * n_out * grid->basis_count()) {
      throw StructuralError("KAN layer coefficients: expected " +
                            std::to_string(n_in * n_out * grid->basis_count()) +
                            ", got " + std::to_string(coefficients.size()));
    }
  }

  KanEdgeView<T> edge(std::size_t q, std::size_t p) const {
    const std::size_t nb = grid->basis_count();
    const std::size_t e = q * n_in + p;
    return {base_weights[e], coefficients.subspan(e * nb, nb), *grid};
  }
};

// Owning layer parameters.
template <std::floating_point T>
class KanLayer {
 public:
  KanLayer(std::size_t n_in, std::size_t n_out, std::shared_ptr<const SplineGrid<T>> grid)
      : n_in_(n_in),
        n_out_(n_out),
        grid_(std::move(grid)),
        base_weights_(n_in * n_out, T(0)),
        coefficients_(n_in * n_out * grid_->basis_count(), T(0)) {
    view().validate();
  }

  std::size_t n_in() const { return n_in_; }
  std::size_t n_out() const { return n_out_; }
  const SplineGrid<T>& grid() const { return *grid_; }
  std::vector<T>& base_weights() { return base_weights_; }
  std::vector<T>& coefficients() { return coefficients_; }
  const std::vector<T>& base_weights() const { return base_weights_; }
  const std::vector<T>& coefficients() const { return coefficients_; }

  KanLayerView<T> view() const {
    return {n_in_, n_out_, grid_.get(), base_weights_, coefficients_};
  }

  KanEdgeFunction<T> edge(std::size_t q, std::size_t p) const {
    const std::size_t nb = grid_->basis_count();
    const std::size_t e = q * n_in_ + p;
    return {base_weights_[e],
            std::vector<T>(coefficients_.begin() + e * nb,
                           coefficients_.begin() + (e + 1) * nb),
            grid_};
  }

 private:
  std::size_t n_in_;
  std::size_t n_out_;
  std::shared_ptr<const SplineGrid<T>> grid_;
  std::vector<T> base_weights_;
  std::vector<T> coefficients_;
};

template <std::floating_point T>
void validate_chain(std::span<const KanLayerView<T>> layers) {
  if (layers.empty()) throw StructuralError("KAN network needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i > 0 && layers[i - 1].n_out != layers[i].n_in) {
      throw StructuralError("KAN layer " + std::to_string(i - 1) + " emits " +
                            std::to_string(layers[i - 1].n_out) + " values but layer " +
                            std::to_string(i) + " expects " +
                            std::to_string(layers[i].n_in));
    }
  }
}

// Owning stack of layers; dimensions are checked on construction.
template <std::floating_point T>
class KanNetwork {
 public:
  explicit KanNetwork(std::vector<KanLayer<T>> layers) : layers_(std::move(layers)) {
    validate_chain<T>(views());
  }

  std::size_t depth() const { return layers_.size(); }
  std::size_t n_in() const { return layers_.front().n_in(); }
  std::size_t n_out() const { return layers_.back().n_out(); }
  KanLayer<T>& layer(std::size_t i) { return layers_[i]; }
  const KanLayer<T>& layer(std::size_t i) const { return layers_[i]; }

  std::vector<KanLayerView<T>> views() const {
    std::vector<KanLayerView<T>> out;
    out.reserve(layers_.size());
    for (const auto& l : layers_) out.push_back(l.view());
    return out;
  }

 private:
  std::vector<KanLayer<T>> layers_;
};

struct KanInit {
  double base_weight = 1.0;
  // Half-width of uniform noise added to the base weight, in units of
  // 1/sqrt(n_in).
  double base_noise = 0.0;
  // Spline coefficients ~ N(0, (coefficient_scale / basis_count)^2).
  double coefficient_scale = 0.1;
};

template <std::floating_point T>
void initialize_layer(std::span<T> base_weights, std::span<T> coefficients, std::size_t n_in,
                      std::size_t basis_count, const KanInit& init, Rng& rng) {
  const double noise = init.base_noise / std::sqrt(static_cast<double>(n_in));
  for (T& w : base_weights) {
    w = static_cast<T>(init.base_weight + (noise > 0 ? rng.uniform(-noise, noise) : 0.0));
  }
  const double sd = init.coefficient_scale / static_cast<double>(basis_count);
  for (T& c : coefficients) c = static_cast<T>(sd * rng.normal());
}

// Builds a network with layer widths dims[0] -> dims[1] -> ... sharing one grid.
template <std::floating_point T>
KanNetwork<T> make_kan_network(std::span<const std::size_t> dims,
                               std::shared_ptr<const SplineGrid<T>> grid, const KanInit& init,
                               Rng& rng) {
  if (dims.size() < 2) throw StructuralError("KAN network needs at least two widths");
  std::vector<KanLayer<T>> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    KanLayer<T> layer(dims[i], dims[i + 1], grid);
    initialize_layer<T>(layer.base_weights(), layer.coefficients(), dims[i],
                        grid->basis_count(), init, rng);
    layers.push_back(std::move(layer));
  }
  return KanNetwork<T>(std::move(layers));
}

// output[q] = sum_p phi_{q,p}(z[p]).
template <std::floating_point T>
std::vector<T> kan_layer_forward(std::span<const T> z, const KanLayerView<T>& layer) {
  layer.validate();
  if (z.size() != layer.n_in) {
    throw StructuralError("kan_layer_forward: input has " + std::to_string(z.size()) +
                          " values, layer expects " + std::to_string(layer.n_in));
  }
  const SplineGrid<T>& grid = *layer.grid;
  const std::size_t nb = grid.basis_count();
  const std::size_t width = grid.order() + 1;
  std::vector<T> out(layer.n_out, T(0));
  T values[SplineGrid<T>::kMaxOrder + 1];
  T derivs[SplineGrid<T>::kMaxOrder + 1];
  for (std::size_t p = 0; p < layer.n_in; ++p) {
    if (!std::isfinite(z[p])) throw InvalidArgument("kan_layer_forward: non-finite input");
    const T s = silu(z[p]);
    const std::size_t first = grid.local_basis(z[p], {values, width}, {derivs, width});
    for (std::size_t q = 0; q < layer.n_out; ++q) {
      const std::size_t e = q * layer.n_in + p;
      const T* c = layer.coefficients.data() + e * nb + first;
      T spline = T(0);
      for (std::size_t j = 0; j < width; ++j) spline += c[j] * values[j];
      out[q] += layer.base_weights[e] * s + spline;
    }
  }
  return out;
}

template <std::floating_point T>
std::vector<T> kan_layer_forward(std::span<const T> z, const KanLayer<T>& layer) {
  return kan_layer_forward(z, layer.view());
}

template <std::floating_point T>
std::vector<T> kan_forward(std::span<const T> z, std::span<const KanLayerView<T>> layers) {
  validate_chain(layers);
  std::vector<T> current(z.begin(), z.end());
  for (const auto& layer : layers) current = kan_layer_forward<T>(current, layer);
  return current;
}

template <std::floating_point T>
std::vector<T> kan_forward(std::span<const T> z, const KanNetwork<T>& net) {
  const auto views = net.views();
  return kan_forward<T>(z, std::span<const KanLayerView<T>>(views));
}

// Gradient sinks for one layer; either span may be empty to skip it.
template <std::floating_point T>
struct KanLayerGradSink {
  std::span<T> base_weights;
  std::span<T> coefficients;
};

// Reverse pass of <upstream, kan_forward(z)>. Parameter gradients are
// accumulated (+=) into `sinks`; returns the gradient with respect to z.
template <std::floating_point T>
std::vector<T> kan_backward(std::span<const T> z, std::span<const KanLayerView<T>> layers,
                            std::span<const T> upstream,
                            std::span<const KanLayerGradSink<T>> sinks) {
  validate_chain(layers);
  if (z.size() != layers.front().n_in) {
    throw StructuralError("kan_backward: input has " + std::to_string(z.size()) +
                          " values, network expects " + std::to_string(layers.front().n_in));
  }
  if (upstream.size() != layers.back().n_out) {
    throw StructuralError("kan_backward: upstream has " + std::to_string(upstream.size()) +
                          " values, network emits " + std::to_string(layers.back().n_out));
  }
  if (!sinks.empty() && sinks.size() != layers.size()) {
    throw StructuralError("kan_backward: one gradient sink per layer required");
  }
  std::vector<std::vector<T>> activations;
  activations.reserve(layers.size() + 1);
  activations.emplace_back(z.begin(), z.end());
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    activations.push_back(kan_layer_forward<T>(activations.back(), layers[l]));
  }

  std::vector<T> grad_out(upstream.begin(), upstream.end());
  T values[SplineGrid<T>::kMaxOrder + 1];
  T derivs[SplineGrid<T>::kMaxOrder + 1];
  for (std::size_t l = layers.size(); l-- > 0;) {
    const KanLayerView<T>& layer = layers[l];
    const std::vector<T>& in = activations[l];
    const SplineGrid<T>& grid = *layer.grid;
    const std::size_t nb = grid.basis_count();
    const std::size_t width = grid.order() + 1;
    const bool want_base = !sinks.empty() && !sinks[l].base_weights.empty();
    const bool want_coef = !sinks.empty() && !sinks[l].coefficients.empty();
    std::vector<T> grad_in(layer.n_in, T(0));
    for (std::size_t p = 0; p < layer.n_in; ++p) {
      const T s = silu(in[p]);
      const T ds = silu_derivative(in[p]);
      const std::size_t first = grid.local_basis(in[p], {values, width}, {derivs, width});
      T acc = T(0);
      for (std::size_t q = 0; q < layer.n_out; ++q) {
        const T g = grad_out[q];
        const std::size_t e = q * layer.n_in + p;
        const T* c = layer.coefficients.data() + e * nb + first;
        if (want_base) sinks[l].base_weights[e] += g * s;
        if (want_coef) {
          T* gc = sinks[l].coefficients.data() + e * nb + first;
          for (std::size_t j = 0; j < width; ++j) gc[j] += g * values[j];
        }
        T local = layer.base_weights[e] * ds;
        for (std::size_t j = 0; j < width; ++j) local += c[j] * derivs[j];
        acc += g * local;
      }
      grad_in[p] = acc;
    }
    grad_out = std::move(grad_in);
  }
  return grad_out;
}

template <std::floating_point T>
struct KanGradients {
  std::vector<std::vector<T>> base_weights;  // per layer, n_out x n_in
  std::vector<std::vector<T>> coefficients;  // per layer, n_out x n_in x basis
  std::vector<T> input;
};

// Analytic gradients of <upstream, kan_forward(z, net)> with respect to every
// parameter and to z.
template <std::floating_point T>
KanGradients<T> kan_gradients(std::span<const T> z, const KanNetwork<T>& net,
                              std::span<const T> upstream) {
  KanGradients<T> grads;
  std::vector<KanLayerGradSink<T>> sinks;
  for (std::size_t l = 0; l < net.depth(); ++l) {
    grads.base_weights.emplace_back(net.layer(l).base_weights().size(), T(0));
    grads.coefficients.emplace_back(net.layer(l).coefficients().size(), T(0));
  }
  for (std::size_t l = 0; l < net.depth(); ++l) {
    sinks.push_back({grads.base_weights[l], grads.coefficients[l]});
  }
  const auto views = net.views();
  grads.input = kan_backward<T>(z, views, upstream, sinks);
  return grads;
}

}  // namespace kanprompt::kan

#endif  // KANPROMPT_KAN_CORE_HPP_
