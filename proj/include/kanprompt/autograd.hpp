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

// Minimal reverse-mode differentiation over 2-D float tensors.
//
// A Tape records every operation of one forward pass. After seeding the
// gradient of one or more outputs, Tape::backward() replays the recorded
// closures in reverse and accumulates into Parameter::grad.

#ifndef KANPROMPT_AUTOGRAD_HPP_
#define KANPROMPT_AUTOGRAD_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kanprompt/kan_core.hpp"
#include "kanprompt/tensor.hpp"

namespace kanprompt {

// A named trainable tensor. The shape is informational; storage is flat.
struct Parameter {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> value;
  std::vector<float> grad;
  bool frozen = false;

  std::size_t size() const { return value.size(); }
};

// Owns parameters at stable addresses, in registration order.
class ParameterSet {
 public:
  ParameterSet() = default;
  ParameterSet(const ParameterSet&) = delete;
  ParameterSet& operator=(const ParameterSet&) = delete;
  ParameterSet(ParameterSet&&) = default;
  ParameterSet& operator=(ParameterSet&&) = default;

  Parameter& add(std::string name, std::vector<std::size_t> shape);
  Parameter* find(std::string_view name);
  const Parameter* find(std::string_view name) const;
  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::size_t count() const { return params_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();
  // Freezes every parameter whose name starts with `prefix`.
  void set_frozen(std::string_view prefix, bool frozen);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

namespace ag {

class Tape;

// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows; }
  std::size_t cols() const { return value().cols; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // An inference tape (track_gradients = false) records values only.
  explicit Tape(bool track_gradients = true) : track_(track_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Views parameter storage as rows x cols (rows * cols must equal its size).
  Var parameter(Parameter& p, std::size_t rows, std::size_t cols);
  Var parameter(Parameter& p);  // 1 x size

  // Records a derived value. `backward` runs once the node's gradient is
  // complete; it is dropped when no input needs a gradient, unless the op
  // itself holds trainable parameters.
  Var record(Tensor value, std::span<const Var> inputs, std::function<void()> backward,
             bool owns_trainable = false);

  const Tensor& value(Var v) const { return nodes_[v.id()].value; }
  bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }
  // Gradient buffer of a node, allocated (zeroed) on first access.
  std::vector<float>& grad(Var v);
  bool has_grad(Var v) const { return !nodes_[v.id()].grad.empty(); }

  void seed(Var v, std::span<const float> g);
  void backward();
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    std::vector<float> grad;
    std::function<void()> backward;
    bool requires_grad = false;
  };
  std::deque<Node> nodes_;
  bool track_ = true;
};

Var matmul(Var a, Var b);     // a (n x m) * b (m x p)
Var matmul_bt(Var a, Var b);  // a (n x m) * b^T, b (p x m)
Var transpose(Var a);
Var add(Var a, Var b);
Var add_row(Var a, Var bias);  // bias is 1 x cols, broadcast over rows
Var scale(Var a, float s);
Var gelu(Var a);
Var silu(Var a);
Var sigmoid(Var a);
Var softmax_rows(Var a);
Var layer_norm(Var x, Var gamma, Var beta, float eps = 1e-5f);
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
// out.data[i] = a.data[index[i]]; index values must be distinct.
Var gather(Var a, std::size_t rows, std::size_t cols, std::vector<std::size_t> index);

// Fixed sparse row mixing: out row r = sum of weight * a row src.
struct RowMix {
  std::size_t out_rows = 0;
  std::vector<std::size_t> offsets;  // out_rows + 1 entries into src/weight
  std::vector<std::size_t> src;
  std::vector<float> weight;
};
Var mix_rows(Var a, std::shared_ptr<const RowMix> mix);

// KAN parameters stored as Parameters, one (base, coefficient) pair per layer.
struct KanParams {
  std::shared_ptr<const kan::SplineGrid<float>> grid;
  std::vector<std::size_t> widths;  // layer widths, size = depth + 1
  std::vector<Parameter*> base_weights;
  std::vector<Parameter*> coefficients;

  std::vector<kan::KanLayerView<float>> views() const;
};
// Applies a KAN network to every row of `x` independently.
Var kan_rows(Var x, const KanParams& net);

}  // namespace ag
}  // namespace kanprompt

#endif  // KANPROMPT_AUTOGRAD_HPP_
