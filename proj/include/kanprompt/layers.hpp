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

// Trainable building blocks shared by the encoders and the mask decoder.

#ifndef KANPROMPT_LAYERS_HPP_
#define KANPROMPT_LAYERS_HPP_

#include <cstddef>
#include <memory>
#include <string>

#include "kanprompt/autograd.hpp"
#include "kanprompt/random.hpp"

namespace kanprompt::nn {

// y = x W + b, with W stored in_features x out_features.
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
         Rng& rng, bool bias = true);

  ag::Var operator()(ag::Tape& tape, ag::Var x) const;
  std::size_t in_features() const { return in_; }
  std::size_t out_features() const { return out_; }
  Parameter& weight() const { return *weight_; }
  Parameter* bias() const { return bias_; }

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterSet& params, const std::string& name, std::size_t dim);
  ag::Var operator()(ag::Tape& tape, ag::Var x) const;
  Parameter& gamma() const { return *gamma_; }
  Parameter& beta() const { return *beta_; }

 private:
  Parameter* gamma_ = nullptr;
  Parameter* beta_ = nullptr;
};

// Multi-head attention with separate query / key / value inputs.
class Attention {
 public:
  Attention() = default;
  Attention(ParameterSet& params, const std::string& name, std::size_t dim, std::size_t heads,
            Rng& rng);
  ag::Var operator()(ag::Tape& tape, ag::Var queries, ag::Var keys, ag::Var values) const;

 private:
  std::size_t dim_ = 0;
  std::size_t heads_ = 1;
  Linear q_, k_, v_, out_;
};

// Two linear layers with a GELU in between.
class Mlp {
 public:
  Mlp() = default;
  Mlp(ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden,
      std::size_t out, Rng& rng);
  ag::Var operator()(ag::Tape& tape, ag::Var x) const;

 private:
  Linear fc1_, fc2_;
};

// Pre-norm self-attention block.
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(ParameterSet& params, const std::string& name, std::size_t dim,
                   std::size_t heads, std::size_t mlp_ratio, Rng& rng);
  ag::Var operator()(ag::Tape& tape, ag::Var x) const;

 private:
  LayerNorm norm1_, norm2_;
  Attention attn_;
  Mlp mlp_;
};

// Fixed 2-D sinusoidal encodings for an h x w grid, one row per cell.
Tensor sinusoidal_positions(int height, int width, std::size_t dim);

// Rearranges (h*w) x (4*c) into (2h*2w) x c; channel block dy*2+dx of a cell
// becomes sub-pixel (dy, dx).
ag::Var pixel_shuffle2(ag::Var x, int height, int width);

// Concatenates each 2x2 neighbourhood: (h*w) x c -> (h/2*w/2) x (4*c).
ag::Var merge_patches2(ag::Var x, int height, int width);

// Bilinear resampling (half-pixel centres) of cell rows from an h x w grid to
// an out_h x out_w grid.
std::shared_ptr<const ag::RowMix> bilinear_mix(int height, int width, int out_height,
                                               int out_width);

}  // namespace kanprompt::nn

#endif  // KANPROMPT_LAYERS_HPP_
