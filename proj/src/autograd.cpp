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

#include "kanprompt/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "kanprompt/errors.hpp"

namespace kanprompt {

Parameter& ParameterSet::add(std::string name, std::vector<std::size_t> shape) {
  if (find(name) != nullptr) throw StructuralError("duplicate parameter name " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  p->shape = std::move(shape);
  p->value.assign(n, 0.0f);
  p->grad.assign(n, 0.0f);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter* ParameterSet::find(std::string_view name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

std::vector<Parameter*> ParameterSet::all() {
  std::vector<Parameter*> out;
  for (auto& p : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterSet::all() const {
  std::vector<const Parameter*> out;
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

void ParameterSet::set_frozen(std::string_view prefix, bool frozen) {
  for (auto& p : params_) {
    if (p->name.starts_with(prefix)) p->frozen = frozen;
  }
}

namespace ag {

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& p, std::size_t rows, std::size_t cols) {
  if (rows * cols != p.size()) {
    throw StructuralError("parameter " + p.name + " has " + std::to_string(p.size()) +
                          " values, cannot view as " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  const std::size_t id = nodes_.size();
  const bool trainable = track_ && !p.frozen;
  Node node{Tensor(rows, cols, p.value), {}, {}, trainable};
  if (trainable) {
    Parameter* target = &p;
    node.backward = [this, id, target] {
      const auto& g = nodes_[id].grad;
      for (std::size_t i = 0; i < g.size(); ++i) target->grad[i] += g[i];
    };
  }
  nodes_.push_back(std::move(node));
  return Var(this, id);
}

Var Tape::parameter(Parameter& p) { return parameter(p, 1, p.size()); }

Var Tape::record(Tensor value, std::span<const Var> inputs, std::function<void()> backward,
                 bool owns_trainable) {
  bool needs = track_ && owns_trainable;
  for (const Var& v : inputs) needs = needs || nodes_[v.id()].requires_grad;
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

std::vector<float>& Tape::grad(Var v) {
  Node& n = nodes_[v.id()];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0f);
  return n.grad;
}

void Tape::seed(Var v, std::span<const float> g) {
  auto& dst = grad(v);
  if (g.size() != dst.size()) throw StructuralError("gradient seed has the wrong size");
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::backward() {
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && !n.grad.empty()) n.backward();
  }
}

namespace {

// c (n x p) += a (n x m) * b (m x p)
void gemm_nn(const float* a, const float* b, float* c, std::size_t n, std::size_t m,
             std::size_t p) {
  for (std::size_t i = 0; i < n; ++i) {
    float* crow = c + i * p;
    for (std::size_t k = 0; k < m; ++k) {
      const float av = a[i * m + k];
      if (av == 0.0f) continue;
      const float* brow = b + k * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

// c (n x p) += a (n x m) * b^T, b (p x m)
void gemm_nt(const float* a, const float* b, float* c, std::size_t n, std::size_t m,
             std::size_t p) {
  for (std::size_t i = 0; i < n; ++i) {
    const float* arow = a + i * m;
    for (std::size_t j = 0; j < p; ++j) {
      const float* brow = b + j * m;
      float acc = 0.0f;
      for (std::size_t k = 0; k < m; ++k) acc += arow[k] * brow[k];
      c[i * p + j] += acc;
    }
  }
}

// c (m x p) += a^T * b, a (n x m), b (n x p)
void gemm_tn(const float* a, const float* b, float* c, std::size_t n, std::size_t m,
             std::size_t p) {
  for (std::size_t i = 0; i < n; ++i) {
    const float* brow = b + i * p;
    for (std::size_t k = 0; k < m; ++k) {
      const float av = a[i * m + k];
      if (av == 0.0f) continue;
      float* crow = c + k * p;
      for (std::size_t j = 0; j < p; ++j) crow[j] += av * brow[j];
    }
  }
}

std::string shape_of(const Tensor& t) {
  return "[" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + "]";
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw StructuralError(std::string(op) + ": shape " + shape_of(a) + " vs " + shape_of(b));
  }
}

template <class F>
Var unary(Var a, F&& fn, std::function<float(float x, float y)> dfn) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  Tensor out(av.rows, av.cols);
  for (std::size_t i = 0; i < av.size(); ++i) out.data[i] = fn(av.data[i]);
  const std::size_t id = t.size();
  const Var inputs[] = {a};
  return t.record(std::move(out), inputs, [&t, a, id, dfn = std::move(dfn)] {
    const Var self(&t, id);
    const auto& g = t.grad(self);
    const auto& x = t.value(a).data;
    const auto& y = t.value(self).data;
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * dfn(x[i], y[i]);
  });
}

constexpr float kGeluC = 0.7978845608028654f;  // sqrt(2 / pi)

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.rows) {
    throw StructuralError("matmul: " + shape_of(av) + " * " + shape_of(bv));
  }
  const std::size_t n = av.rows, m = av.cols, p = bv.cols;
  Tensor out(n, p);
  gemm_nn(av.data.data(), bv.data.data(), out.data.data(), n, m, p);
  const std::size_t id = t.size();
  const Var inputs[] = {a, b};
  return t.record(std::move(out), inputs, [&t, a, b, id, n, m, p] {
    const auto& g = t.grad(Var(&t, id));
    if (t.requires_grad(a)) gemm_nt(g.data(), t.value(b).data.data(), t.grad(a).data(), n, p, m);
    if (t.requires_grad(b)) gemm_tn(t.value(a).data.data(), g.data(), t.grad(b).data(), n, m, p);
  });
}

Var matmul_bt(Var a, Var b) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols != bv.cols) {
    throw StructuralError("matmul_bt: " + shape_of(av) + " * " + shape_of(bv) + "^T");
  }
  const std::size_t n = av.rows, m = av.cols, p = bv.rows;
  Tensor out(n, p);
  gemm_nt(av.data.data(), bv.data.data(), out.data.data(), n, m, p);
  const std::size_t id = t.size();
  const Var inputs[] = {a, b};
  return t.record(std::move(out), inputs, [&t, a, b, id, n, m, p] {
    const auto& g = t.grad(Var(&t, id));
    if (t.requires_grad(a)) gemm_nn(g.data(), t.value(b).data.data(), t.grad(a).data(), n, p, m);
    if (t.requires_grad(b)) gemm_tn(g.data(), t.value(a).data.data(), t.grad(b).data(), n, p, m);
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  std::vector<std::size_t> index(av.size());
  for (std::size_t r = 0; r < av.cols; ++r) {
    for (std::size_t c = 0; c < av.rows; ++c) index[r * av.rows + c] = c * av.cols + r;
  }
  return gather(a, av.cols, av.rows, std::move(index));
}

Var add(Var a, Var b) {
  Tape& t = *a.tape();
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const auto& bv = b.value().data;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += bv[i];
  const std::size_t id = t.size();
  const Var inputs[] = {a, b};
  return t.record(std::move(out), inputs, [&t, a, b, id] {
    const auto& g = t.grad(Var(&t, id));
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      auto& gv = t.grad(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var add_row(Var a, Var bias) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.size() != av.cols) {
    throw StructuralError("add_row: bias " + shape_of(bv) + " for " + shape_of(av));
  }
  Tensor out = av;
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t c = 0; c < av.cols; ++c) out(r, c) += bv.data[c];
  }
  const std::size_t id = t.size();
  const Var inputs[] = {a, bias};
  const std::size_t rows = av.rows, cols = av.cols;
  return t.record(std::move(out), inputs, [&t, a, bias, id, rows, cols] {
    const auto& g = t.grad(Var(&t, id));
    if (t.requires_grad(a)) {
      auto& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(bias)) {
      auto& gb = t.grad(bias);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
      }
    }
  });
}

Var scale(Var a, float s) {
  return unary(
      a, [s](float x) { return s * x; }, [s](float, float) { return s; });
}

Var gelu(Var a) {
  return unary(
      a,
      [](float x) {
        return 0.5f * x * (1.0f + std::tanh(kGeluC * (x + 0.044715f * x * x * x)));
      },
      [](float x, float) {
        const float u = kGeluC * (x + 0.044715f * x * x * x);
        const float th = std::tanh(u);
        const float du = kGeluC * (1.0f + 3.0f * 0.044715f * x * x);
        return 0.5f * (1.0f + th) + 0.5f * x * (1.0f - th * th) * du;
      });
}

Var silu(Var a) {
  return unary(
      a, [](float x) { return kan::silu(x); },
      [](float x, float) { return kan::silu_derivative(x); });
}

Var sigmoid(Var a) {
  return unary(
      a, [](float x) { return 1.0f / (1.0f + std::exp(-x)); },
      [](float, float y) { return y * (1.0f - y); });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  Tensor out(av.rows, av.cols);
  for (std::size_t r = 0; r < av.rows; ++r) {
    float mx = av(r, 0);
    for (std::size_t c = 1; c < av.cols; ++c) mx = std::max(mx, av(r, c));
    float sum = 0.0f;
    for (std::size_t c = 0; c < av.cols; ++c) {
      out(r, c) = std::exp(av(r, c) - mx);
      sum += out(r, c);
    }
    for (std::size_t c = 0; c < av.cols; ++c) out(r, c) /= sum;
  }
  const std::size_t id = t.size();
  const Var inputs[] = {a};
  return t.record(std::move(out), inputs, [&t, a, id] {
    const Var self(&t, id);
    const auto& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(a);
    for (std::size_t r = 0; r < y.rows; ++r) {
      float dot = 0.0f;
      for (std::size_t c = 0; c < y.cols; ++c) dot += g[r * y.cols + c] * y(r, c);
      for (std::size_t c = 0; c < y.cols; ++c) {
        ga[r * y.cols + c] += y(r, c) * (g[r * y.cols + c] - dot);
      }
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, float eps) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows, cols = xv.cols;
  if (gamma.value().size() != cols || beta.value().size() != cols) {
    throw StructuralError("layer_norm: affine parameters do not match " + shape_of(xv));
  }
  Tensor out(rows, cols);
  auto xhat = std::make_shared<Tensor>(rows, cols);
  auto inv_std = std::make_shared<std::vector<float>>(rows);
  const auto& gv = gamma.value().data;
  const auto& bv = beta.value().data;
  for (std::size_t r = 0; r < rows; ++r) {
    float mean = 0.0f;
    for (std::size_t c = 0; c < cols; ++c) mean += xv(r, c);
    mean /= static_cast<float>(cols);
    float var = 0.0f;
    for (std::size_t c = 0; c < cols; ++c) var += (xv(r, c) - mean) * (xv(r, c) - mean);
    var /= static_cast<float>(cols);
    const float is = 1.0f / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (std::size_t c = 0; c < cols; ++c) {
      (*xhat)(r, c) = (xv(r, c) - mean) * is;
      out(r, c) = gv[c] * (*xhat)(r, c) + bv[c];
    }
  }
  const std::size_t id = t.size();
  const Var inputs[] = {x, gamma, beta};
  return t.record(std::move(out), inputs, [&t, x, gamma, beta, id, xhat, inv_std, rows, cols] {
    const auto& g = t.grad(Var(&t, id));
    const auto& gv = t.value(gamma).data;
    if (t.requires_grad(gamma) || t.requires_grad(beta)) {
      auto& gg = t.grad(gamma);
      auto& gb = t.grad(beta);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          gg[c] += g[r * cols + c] * (*xhat)(r, c);
          gb[c] += g[r * cols + c];
        }
      }
    }
    if (!t.requires_grad(x)) return;
    auto& gx = t.grad(x);
    std::vector<float> dxhat(cols);
    for (std::size_t r = 0; r < rows; ++r) {
      float mean_d = 0.0f, mean_dx = 0.0f;
      for (std::size_t c = 0; c < cols; ++c) {
        dxhat[c] = g[r * cols + c] * gv[c];
        mean_d += dxhat[c];
        mean_dx += dxhat[c] * (*xhat)(r, c);
      }
      mean_d /= static_cast<float>(cols);
      mean_dx /= static_cast<float>(cols);
      for (std::size_t c = 0; c < cols; ++c) {
        gx[r * cols + c] += (*inv_std)[r] * (dxhat[c] - mean_d - (*xhat)(r, c) * mean_dx);
      }
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw StructuralError("concat_cols: no inputs");
  Tape& t = *parts[0].tape();
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) {
      throw StructuralError("concat_cols: row mismatch " + shape_of(parts[0].value()) + " vs " +
                            shape_of(p.value()));
    }
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(pv.data.begin() + r * pv.cols, pv.data.begin() + (r + 1) * pv.cols,
                out.data.begin() + r * cols + offset);
    }
    offset += pv.cols;
  }
  const std::size_t id = t.size();
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), inputs, [&t, inputs, id, rows, cols] {
    const auto& g = t.grad(Var(&t, id));
    std::size_t offset = 0;
    for (const Var& p : inputs) {
      const std::size_t pc = t.value(p).cols;
      if (t.requires_grad(p)) {
        auto& gp = t.grad(p);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t c = 0; c < pc; ++c) gp[r * pc + c] += g[r * cols + offset + c];
        }
      }
      offset += pc;
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (begin + count > av.cols) throw StructuralError("slice_cols: out of range");
  std::vector<std::size_t> index(av.rows * count);
  for (std::size_t r = 0; r < av.rows; ++r) {
    for (std::size_t c = 0; c < count; ++c) index[r * count + c] = r * av.cols + begin + c;
  }
  return gather(a, av.rows, count, std::move(index));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw StructuralError("concat_rows: no inputs");
  Tape& t = *parts[0].tape();
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw StructuralError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data.begin(), p.value().data.end(), out.data.begin() + offset);
    offset += p.value().size();
  }
  const std::size_t id = t.size();
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.record(std::move(out), inputs, [&t, inputs, id] {
    const auto& g = t.grad(Var(&t, id));
    std::size_t offset = 0;
    for (const Var& p : inputs) {
      const std::size_t n = t.value(p).size();
      if (t.requires_grad(p)) {
        auto& gp = t.grad(p);
        for (std::size_t i = 0; i < n; ++i) gp[i] += g[offset + i];
      }
      offset += n;
    }
  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Tensor& av = a.value();
  if (begin + count > av.rows) throw StructuralError("slice_rows: out of range");
  std::vector<std::size_t> index(count * av.cols);
  std::iota(index.begin(), index.end(), begin * av.cols);
  return gather(a, count, av.cols, std::move(index));
}

Var gather(Var a, std::size_t rows, std::size_t cols, std::vector<std::size_t> index) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  if (index.size() != rows * cols) throw StructuralError("gather: index size mismatch");
  Tensor out(rows, cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= av.size()) throw StructuralError("gather: index out of range");
    out.data[i] = av.data[index[i]];
  }
  const std::size_t id = t.size();
  const Var inputs[] = {a};
  return t.record(std::move(out), inputs, [&t, a, id, index = std::move(index)] {
    const auto& g = t.grad(Var(&t, id));
    auto& ga = t.grad(a);
    for (std::size_t i = 0; i < index.size(); ++i) ga[index[i]] += g[i];
  });
}

Var mix_rows(Var a, std::shared_ptr<const RowMix> mix) {
  Tape& t = *a.tape();
  const Tensor& av = a.value();
  const std::size_t cols = av.cols;
  Tensor out(mix->out_rows, cols);
  for (std::size_t r = 0; r < mix->out_rows; ++r) {
    for (std::size_t e = mix->offsets[r]; e < mix->offsets[r + 1]; ++e) {
      if (mix->src[e] >= av.rows) throw StructuralError("mix_rows: source row out of range");
      const float w = mix->weight[e];
      const float* src = av.data.data() + mix->src[e] * cols;
      float* dst = out.data.data() + r * cols;
      for (std::size_t c = 0; c < cols; ++c) dst[c] += w * src[c];
    }
  }
  const std::size_t id = t.size();
  const Var inputs[] = {a};
  return t.record(std::move(out), inputs, [&t, a, id, mix, cols] {
    const auto& g = t.grad(Var(&t, id));
    auto& ga = t.grad(a);
    for (std::size_t r = 0; r < mix->out_rows; ++r) {
      for (std::size_t e = mix->offsets[r]; e < mix->offsets[r + 1]; ++e) {
        const float w = mix->weight[e];
        float* dst = ga.data() + mix->src[e] * cols;
        const float* src = g.data() + r * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += w * src[c];
      }
    }
  });
}

std::vector<kan::KanLayerView<float>> KanParams::views() const {
  std::vector<kan::KanLayerView<float>> out;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    out.push_back({widths[l], widths[l + 1], grid.get(), base_weights[l]->value,
                   coefficients[l]->value});
  }
  return out;
}

Var kan_rows(Var x, const KanParams& net) {
  Tape& t = *x.tape();
  const Tensor& xv = x.value();
  const auto views = net.views();
  kan::validate_chain<float>(views);
  if (xv.cols != net.widths.front()) {
    throw StructuralError("kan_rows: input width " + std::to_string(xv.cols) +
                          " but network expects " + std::to_string(net.widths.front()));
  }
  const std::size_t out_cols = net.widths.back();
  Tensor out(xv.rows, out_cols);
  for (std::size_t r = 0; r < xv.rows; ++r) {
    const auto y = kan::kan_forward<float>(xv.row(r), views);
    std::copy(y.begin(), y.end(), out.data.begin() + r * out_cols);
  }
  const std::size_t id = t.size();
  bool any_trainable = false;
  for (const Parameter* p : net.base_weights) any_trainable = any_trainable || !p->frozen;
  for (const Parameter* p : net.coefficients) any_trainable = any_trainable || !p->frozen;
  // A trainable KAN needs the backward pass even when x is a constant.
  const Var inputs[] = {x};
  return t.record(std::move(out), inputs, [&t, x, id, net] {
    const auto& g = t.grad(Var(&t, id));
    const auto views = net.views();
    std::vector<kan::KanLayerGradSink<float>> sinks;
    for (std::size_t l = 0; l < views.size(); ++l) {
      Parameter* b = net.base_weights[l];
      Parameter* c = net.coefficients[l];
      sinks.push_back({b->frozen ? std::span<float>() : std::span<float>(b->grad),
                       c->frozen ? std::span<float>() : std::span<float>(c->grad)});
    }
    const Tensor& xv = t.value(x);
    const std::size_t out_cols = net.widths.back();
    const bool want_input = t.requires_grad(x);
    for (std::size_t r = 0; r < xv.rows; ++r) {
      const auto gin = kan::kan_backward<float>(
          xv.row(r), views, std::span<const float>(g).subspan(r * out_cols, out_cols), sinks);
      if (want_input) {
        auto& gx = t.grad(x);
        for (std::size_t c = 0; c < xv.cols; ++c) gx[r * xv.cols + c] += gin[c];
      }
    }
  }, any_trainable);
}

}  // namespace ag
}  // namespace kanprompt
