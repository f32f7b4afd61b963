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

#include "kanprompt/decoder.hpp"

#include <string>

#include "kanprompt/errors.hpp"

namespace kanprompt {

LabelMap predict_semantic(const SegmentationOutput& out) {
  LabelMap labels;
  labels.height = out.height;
  labels.width = out.width;
  const std::size_t n = static_cast<std::size_t>(out.height) * out.width;
  labels.labels.assign(n, 0);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = 0;
    float best_value = out.mask_logits[p];
    for (std::size_t c = 1; c < out.num_classes; ++c) {
      const float v = out.mask_logits[c * n + p];
      if (v > best_value) {
        best = c;
        best_value = v;
      }
    }
    labels.labels[p] = static_cast<std::uint8_t>(best);
  }
  return labels;
}

MaskDecoder::MaskDecoder(ParameterSet& params, const DecoderConfig& cfg, Rng& rng) : cfg_(cfg) {
  const std::size_t d = cfg.dim;
  if (d < 8 || d % 8 != 0) {
    throw InvalidArgument("decoder dim must be a positive multiple of 8, got " + std::to_string(d));
  }
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string name = "decoder.block" + std::to_string(b);
    Block block;
    if (cfg.token_self_attention) {
      block.self_attn = nn::Attention(params, name + ".self_attn", d, cfg.heads, rng);
      block.self_norm = nn::LayerNorm(params, name + ".self_norm", d);
    }
    block.token_to_image = nn::Attention(params, name + ".token_to_image", d, cfg.heads, rng);
    block.norm1 = nn::LayerNorm(params, name + ".norm1", d);
    block.mlp = nn::Mlp(params, name + ".mlp", d, 2 * d, d, rng);
    block.norm2 = nn::LayerNorm(params, name + ".norm2", d);
    block.image_to_token = nn::Attention(params, name + ".image_to_token", d, cfg.heads, rng);
    block.norm3 = nn::LayerNorm(params, name + ".norm3", d);
    blocks_.push_back(std::move(block));
  }
  final_attn_ = nn::Attention(params, "decoder.final_attn", d, cfg.heads, rng);
  final_norm_ = nn::LayerNorm(params, "decoder.final_norm", d);
  up1_ = nn::Linear(params, "decoder.upscale1", d, 4 * (d / 4), rng);
  up_norm_ = nn::LayerNorm(params, "decoder.upscale_norm", d / 4);
  up2_ = nn::Linear(params, "decoder.upscale2", d / 4, 4 * (d / 8), rng);
  hyper_ = nn::Mlp(params, "decoder.hypernet", d, d, d / 8, rng);
  iou_head_ = nn::Mlp(params, "decoder.iou_head", d, d, 1, rng);
}

MaskDecoder::Outputs MaskDecoder::forward(ag::Tape& tape, ag::Var features, int grid_h,
                                          int grid_w, ag::Var tokens) const {
  const std::size_t d = cfg_.dim;
  if (features.cols() != d || tokens.cols() != d) {
    throw StructuralError("decoder: features have " + std::to_string(features.cols()) +
                          " channels and prompts " + std::to_string(tokens.cols()) +
                          ", decoder width is " + std::to_string(d));
  }
  if (features.rows() != static_cast<std::size_t>(grid_h) * grid_w) {
    throw StructuralError("decoder: feature rows do not match the grid");
  }
  const ag::Var pos = tape.constant(nn::sinusoidal_positions(grid_h, grid_w, d));
  ag::Var image = features;
  ag::Var tok = tokens;
  for (const Block& b : blocks_) {
    if (cfg_.token_self_attention) {
      tok = b.self_norm(tape, ag::add(tok, b.self_attn(tape, tok, tok, tok)));
    }
    const ag::Var keys = ag::add(image, pos);
    tok = b.norm1(tape, ag::add(tok, b.token_to_image(tape, tok, keys, image)));
    tok = b.norm2(tape, ag::add(tok, b.mlp(tape, tok)));
    image = b.norm3(tape, ag::add(image, b.image_to_token(tape, ag::add(image, pos), tok, tok)));
  }
  tok = final_norm_(tape, ag::add(tok, final_attn_(tape, tok, ag::add(image, pos), image)));

  // 4x upscaling of the feature grid by two sub-pixel steps.
  ag::Var up = nn::pixel_shuffle2(up1_(tape, image), grid_h, grid_w);
  up = ag::gelu(up_norm_(tape, up));
  up = ag::gelu(nn::pixel_shuffle2(up2_(tape, up), 2 * grid_h, 2 * grid_w));

  // Each token becomes a dynamic 1x1 filter over the upscaled features.
  const ag::Var filters = hyper_(tape, tok);
  ag::Var low = ag::matmul_bt(up, filters);  // (16 cells) x k
  const int height = grid_h * cfg_.stride;
  const int width = grid_w * cfg_.stride;
  const ag::Var full = ag::mix_rows(low, nn::bilinear_mix(4 * grid_h, 4 * grid_w, height, width));
  Outputs out;
  out.mask_logits = ag::transpose(full);
  out.ious = ag::sigmoid(iou_head_(tape, tok));
  out.height = height;
  out.width = width;
  return out;
}

SegmentationOutput to_segmentation_output(const MaskDecoder::Outputs& out) {
  SegmentationOutput seg;
  seg.num_classes = out.ious.rows();
  seg.height = out.height;
  seg.width = out.width;
  seg.mask_logits = out.mask_logits.value().data;
  seg.ious = out.ious.value().data;
  return seg;
}

SegmentationOutput decode(const FeatureMap& aligned, const PromptTokenSet<float>& prompts,
                          const MaskDecoder& decoder) {
  if (prompts.dim != static_cast<std::size_t>(aligned.channels())) {
    throw StructuralError("decode: prompt dim " + std::to_string(prompts.dim) +
                          " does not match feature channels " +
                          std::to_string(aligned.channels()));
  }
  ag::Tape tape(false);
  const ag::Var features = tape.constant(aligned.values);
  const ag::Var tokens = tape.constant(Tensor(prompts.num_classes, prompts.dim, prompts.values));
  return to_segmentation_output(
      decoder.forward(tape, features, aligned.height, aligned.width, tokens));
}

}  // namespace kanprompt
