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

// Full segmentation model: two encoders, channel fusion, dimension
// alignment, learnable class prompts and the mask decoder.

#ifndef KANPROMPT_MODEL_HPP_
#define KANPROMPT_MODEL_HPP_

#include <cstdint>
#include <memory>

#include "kanprompt/autograd.hpp"
#include "kanprompt/decoder.hpp"
#include "kanprompt/encoders.hpp"
#include "kanprompt/prompt.hpp"

namespace kanprompt {

struct ModelConfig {
  int num_classes = 2;
  EncoderConfig encoder;
  int decoder_dim = 256;
  int decoder_blocks = 2;
  int decoder_heads = 4;
  bool token_self_attention = false;
  PromptKind prompt_kind = PromptKind::kKan;
  int prompt_depth = 3;
  bool shared_prompt_network = false;
  int spline_intervals = 8;
  int spline_order = 3;
  // Nonzero: read precomputed features of this width instead of running the
  // corresponding stub encoder.
  int sam2_feature_channels = 0;
  int pathology_feature_channels = 0;
  std::uint64_t seed = 0;
};

class SegmentationModel {
 public:
  explicit SegmentationModel(const ModelConfig& cfg);
  SegmentationModel(const SegmentationModel&) = delete;
  SegmentationModel& operator=(const SegmentationModel&) = delete;

  struct Forward {
    ag::Var fused;
    ag::Var aligned;
    ag::Var tokens;
    MaskDecoder::Outputs decoded;
  };

  Forward forward(ag::Tape& tape, const ImageTensor& image) const;
  SegmentationOutput predict(const ImageTensor& image) const;
  LabelMap predict_labels(const ImageTensor& image) const;

  const ModelConfig& config() const { return cfg_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }
  const ImageEncoder& encoder(EncoderKind kind) const;
  const DimensionAlign& align() const { return align_; }
  const PromptGenerator& prompts() const { return prompts_; }
  const MaskDecoder& decoder() const { return decoder_; }
  // Parameter-name prefix of an encoder's parameters.
  static std::string encoder_prefix(EncoderKind kind);

 private:
  ModelConfig cfg_;
  ParameterSet params_;
  std::unique_ptr<ImageEncoder> sam2_;
  std::unique_ptr<ImageEncoder> pathology_;
  DimensionAlign align_;
  PromptGenerator prompts_;
  MaskDecoder decoder_;
};

}  // namespace kanprompt

#endif  // KANPROMPT_MODEL_HPP_
