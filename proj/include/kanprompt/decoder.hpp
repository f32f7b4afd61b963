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

// Prompt-conditioned mask decoder: k prompt tokens and the aligned feature
// grid exchange information through two-way cross attention, after which
// every token yields one full-resolution mask and one predicted IOU.

#ifndef KANPROMPT_DECODER_HPP_
#define KANPROMPT_DECODER_HPP_

#include <cstddef>
#include <vector>

#include "kanprompt/autograd.hpp"
#include "kanprompt/layers.hpp"
#include "kanprompt/prompt.hpp"
#include "kanprompt/tensor.hpp"

namespace kanprompt {

// k mask-logit planes of height x width plus k predicted IOUs.
struct SegmentationOutput {
  std::size_t num_classes = 0;
  int height = 0;
  int width = 0;
  std::vector<float> mask_logits;  // plane i at [i * height * width, ...)
  std::vector<float> ious;

  std::span<const float> plane(std::size_t i) const {
    const std::size_t n = static_cast<std::size_t>(height) * width;
    return std::span<const float>(mask_logits).subspan(i * n, n);
  }
  friend bool operator==(const SegmentationOutput&, const SegmentationOutput&) = default;
};

// Per-pixel argmax over the mask planes; ties resolve to the lowest class.
LabelMap predict_semantic(const SegmentationOutput& out);

struct DecoderConfig {
  std::size_t dim = 256;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  // Token-token self attention before each cross-attention block.
  bool token_self_attention = false;
  // Spatial stride of the feature grid relative to the image.
  int stride = 16;
};

class MaskDecoder {
 public:
  struct Outputs {
    ag::Var mask_logits;  // k x (height * width)
    ag::Var ious;         // k x 1, in (0, 1)
    int height = 0;
    int width = 0;
  };

  MaskDecoder() = default;
  MaskDecoder(ParameterSet& params, const DecoderConfig& cfg, Rng& rng);

  // `features` has grid_h * grid_w rows of dim channels, `tokens` k rows.
  Outputs forward(ag::Tape& tape, ag::Var features, int grid_h, int grid_w,
                  ag::Var tokens) const;
  const DecoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    nn::Attention self_attn;
    nn::LayerNorm self_norm;
    nn::Attention token_to_image;
    nn::LayerNorm norm1;
    nn::Mlp mlp;
    nn::LayerNorm norm2;
    nn::Attention image_to_token;
    nn::LayerNorm norm3;
  };

  DecoderConfig cfg_;
  std::vector<Block> blocks_;
  nn::Attention final_attn_;
  nn::LayerNorm final_norm_;
  nn::Linear up1_;
  nn::LayerNorm up_norm_;
  nn::Linear up2_;
  nn::Mlp hyper_;
  nn::Mlp iou_head_;
};

SegmentationOutput to_segmentation_output(const MaskDecoder::Outputs& out);

// Decodes aligned features with a set of prompt tokens.
SegmentationOutput decode(const FeatureMap& aligned, const PromptTokenSet<float>& prompts,
                          const MaskDecoder& decoder);

}  // namespace kanprompt

#endif  // KANPROMPT_DECODER_HPP_
