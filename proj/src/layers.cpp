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

#include "kanprompt/layers.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "kanprompt/errors.hpp"

namespace kanprompt::nn {

Linear::Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
               Rng& rng, bool bias)
    : in_(in), out_(out) {
  weight_ = &params.add(name + ".weight", {in, out});
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (float& w : weight_->value) w = static_cast<float>(rng.uniform(-bound, bound));
  if (bias) bias_ = &params.add(name + ".bias", {out});
}

ag::Var Linear::operator()(ag::Tape& tape, ag::Var x) const {
  ag::Var y = ag::matmul(x, tape.parameter(*weight_, in_, out_));
  if (bias_ != nullptr) y = ag::add_row(y, tape.parameter(*bias_));
  return y;
}

LayerNorm::LayerNorm(ParameterSet& params, const std::string& name, std::size_t dim) {
  gamma_ = &params.add(name + ".gamma", {dim});
  beta_ = &params.add(name + ".beta", {dim});
  std::fill(gamma_->value.begin(), gamma_->value.end(), 1.0f);
}

ag::Var LayerNorm::operator()(ag::Tape& tape, ag::Var x) const {
  return ag::layer_norm(x, tape.parameter(*gamma_), tape.parameter(*beta_));
}

Attention::Attention(ParameterSet& params, const std::string& name, std::size_t dim,
                     std::size_t heads, Rng& rng)
    : dim_(dim), heads_(heads) {
  if (heads == 0 || dim % heads != 0) {
    throw StructuralError(name + ": width " + std::to_string(dim) +
                          " is not divisible by " + std::to_string(heads) + " heads");
  }
  q_ = Linear(params, name + ".q", dim, dim, rng);
  k_ = Linear(params, name + ".k", dim, dim, rng);
  v_ = Linear(params, name + ".v", dim, dim, rng);
  out_ = Linear(params, name + ".out", dim, dim, rng);
}

ag::Var Attention::operator()(ag::Tape& tape, ag::Var queries, ag::Var keys,
                              ag::Var values) const {
  const ag::Var q = q_(tape, queries);
  const ag::Var k = k_(tape, keys);
  const ag::Var v = v_(tape, values);
  const std::size_t head_dim = dim_ / heads_;
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(head_dim));
  std::vector<ag::Var> outputs;
  for (std::size_t h = 0; h < heads_; ++h) {
    const ag::Var qh = heads_ == 1 ? q : ag::slice_cols(q, h * head_dim, head_dim);
    const ag::Var kh = heads_ == 1 ? k : ag::slice_cols(k, h * head_dim, head_dim);
    const ag::Var vh = heads_ == 1 ? v : ag::slice_cols(v, h * head_dim, head_dim);
    const ag::Var weights = ag::softmax_rows(ag::scale(ag::matmul_bt(qh, kh), inv_sqrt));
    outputs.push_back(ag::matmul(weights, vh));
  }
  const ag::Var merged = heads_ == 1 ? outputs.front() : ag::concat_cols(outputs);
  return out_(tape, merged);
}

Mlp::Mlp(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
         std::size_t out, Rng& rng)
    : fc1_(params, name + ".fc1", in, hidden, rng), fc2_(params, name + ".fc2", hidden, out, rng) {}

ag::Var Mlp::operator()(ag::Tape& tape, ag::Var x) const {
  return fc2_(tape, ag::gelu(fc1_(tape, x)));
}

TransformerBlock::TransformerBlock(ParameterSet& params, const std::string& name,
                                   std::size_t dim, std::size_t heads, std::size_t mlp_ratio,
                                   Rng& rng)
    : norm1_(params, name + ".norm1", dim),
      norm2_(params, name + ".norm2", dim),
      attn_(params, name + ".attn", dim, heads, rng),
      mlp_(params, name + ".mlp", dim, dim * mlp_ratio, dim, rng) {}

ag::Var TransformerBlock::operator()(ag::Tape& tape, ag::Var x) const {
  const ag::Var n1 = norm1_(tape, x);
  x = ag::add(x, attn_(tape, n1, n1, n1));
  return ag::add(x, mlp_(tape, norm2_(tape, x)));
}

Tensor sinusoidal_positions(int height, int width, std::size_t dim) {
  Tensor out(static_cast<std::size_t>(height) * width, dim);
  const std::size_t half = dim / 2;
  const std::size_t pairs = std::max<std::size_t>(half / 2, 1);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t row = static_cast<std::size_t>(y) * width + x;
      for (std::size_t c = 0; c < dim; ++c) {
        const bool use_x = c >= half;
        const std::size_t local = use_x ? c - half : c;
        const std::size_t pair = (local / 2) % pairs;
        const double freq = std::pow(100.0, -static_cast<double>(pair) / pairs);
        const double pos = (use_x ? x : y) + 0.5;
        out(row, c) = static_cast<float>(local % 2 == 0 ? std::sin(pos * freq * 1.5)
                                                        : std::cos(pos * freq * 1.5));
      }
    }
  }
  return out;
}

ag::Var pixel_shuffle2(ag::Var x, int height, int width) {
  const std::size_t cells = static_cast<std::size_t>(height) * width;
  if (x.rows() != cells || x.cols() % 4 != 0) {
    throw StructuralError("pixel_shuffle2: expected " + std::to_string(cells) +
                          " rows and a multiple of 4 channels");
  }
  const std::size_t c = x.cols() / 4;
  const std::size_t in_cols = x.cols();
  const int out_w = 2 * width;
  std::vector<std::size_t> index(cells * 4 * c);
  for (int y = 0; y < height; ++y) {
    for (int xx = 0; xx < width; ++xx) {
      const std::size_t src_row = static_cast<std::size_t>(y) * width + xx;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const std::size_t dst_row = static_cast<std::size_t>(2 * y + dy) * out_w + 2 * xx + dx;
          const std::size_t block = static_cast<std::size_t>(dy * 2 + dx) * c;
          for (std::size_t j = 0; j < c; ++j) {
            index[dst_row * c + j] = src_row * in_cols + block + j;
          }
        }
      }
    }
  }
  return ag::gather(x, cells * 4, c, std::move(index));
}

ag::Var merge_patches2(ag::Var x, int height, int width) {
  if (height % 2 != 0 || width % 2 != 0) {
    throw StructuralError("merge_patches2: grid " + std::to_string(height) + "x" +
                          std::to_string(width) + " is not even");
  }
  const std::size_t c = x.cols();
  const int oh = height / 2, ow = width / 2;
  std::vector<std::size_t> index(static_cast<std::size_t>(oh) * ow * 4 * c);
  for (int y = 0; y < oh; ++y) {
    for (int xx = 0; xx < ow; ++xx) {
      const std::size_t dst_row = static_cast<std::size_t>(y) * ow + xx;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const std::size_t src_row = static_cast<std::size_t>(2 * y + dy) * width + 2 * xx + dx;
          const std::size_t block = static_cast<std::size_t>(dy * 2 + dx) * c;
          for (std::size_t j = 0; j < c; ++j) {
            index[dst_row * 4 * c + block + j] = src_row * c + j;
          }
        }
      }
    }
  }
  return ag::gather(x, static_cast<std::size_t>(oh) * ow, 4 * c, std::move(index));
}

std::shared_ptr<const ag::RowMix> bilinear_mix(int height, int width, int out_height,
                                               int out_width) {
  auto mix = std::make_shared<ag::RowMix>();
  mix->out_rows = static_cast<std::size_t>(out_height) * out_width;
  mix->offsets.push_back(0);
  const double sy = static_cast<double>(height) / out_height;
  const double sx = static_cast<double>(width) / out_width;
  auto axis = [](double pos, int n, int& i0, int& i1, double& frac) {
    pos = std::clamp(pos, 0.0, static_cast<double>(n - 1));
    i0 = static_cast<int>(std::floor(pos));
    i1 = std::min(i0 + 1, n - 1);
    frac = pos - i0;
  };
  for (int y = 0; y < out_height; ++y) {
    int y0, y1;
    double fy;
    axis((y + 0.5) * sy - 0.5, height, y0, y1, fy);
    for (int x = 0; x < out_width; ++x) {
      int x0, x1;
      double fx;
      axis((x + 0.5) * sx - 0.5, width, x0, x1, fx);
      const int ys[2] = {y0, y1};
      const int xs[2] = {x0, x1};
      const double wy[2] = {1.0 - fy, fy};
      const double wx[2] = {1.0 - fx, fx};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double w = wy[a] * wx[b];
          if (w == 0.0) continue;
          mix->src.push_back(static_cast<std::size_t>(ys[a]) * width + xs[b]);
          mix->weight.push_back(static_cast<float>(w));
        }
      }
      mix->offsets.push_back(mix->src.size());
    }
  }
  return mix;
}

}  // namespace kanprompt::nn
