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

#include "kanprompt/model.hpp"

#include "kanprompt/errors.hpp"

namespace kanprompt {
namespace {

std::unique_ptr<ImageEncoder> make_encoder(EncoderKind kind, int file_channels,
                                           const EncoderConfig& cfg, ParameterSet& params) {
  if (file_channels > 0) return std::make_unique<FeatureFileEncoder>(kind, file_channels);
  return std::make_unique<StubEncoder>(kind, cfg, params);
}

}  // namespace

SegmentationModel::SegmentationModel(const ModelConfig& cfg) : cfg_(cfg) {
  if (cfg.num_classes < 1 || cfg.num_classes > 255) {
    throw InvalidArgument("class count must be in [1, 255], got " +
                          std::to_string(cfg.num_classes));
  }
  if (cfg.decoder_dim <= 0) throw InvalidArgument("decoder dim must be positive");
  sam2_ = make_encoder(EncoderKind::kSam2Stub, cfg.sam2_feature_channels, cfg.encoder, params_);
  pathology_ = make_encoder(EncoderKind::kPathologyStub, cfg.pathology_feature_channels,
                            cfg.encoder, params_);
  if (sam2_->stride() != pathology_->stride()) {
    throw StructuralError("encoders must share one stride");
  }
  Rng rng(cfg.seed * 0x9E3779B97F4A7C15ull + 17);
  Rng align_rng = rng.fork();
  Rng prompt_rng = rng.fork();
  Rng decoder_rng = rng.fork();
  align_ = DimensionAlign(params_, "align", sam2_->channels() + pathology_->channels(),
                          cfg.decoder_dim, align_rng);
  PromptConfig pc;
  pc.num_classes = static_cast<std::size_t>(cfg.num_classes);
  pc.dim = static_cast<std::size_t>(cfg.decoder_dim);
  pc.kind = cfg.prompt_kind;
  pc.depth = static_cast<std::size_t>(cfg.prompt_depth);
  pc.shared_network = cfg.shared_prompt_network;
  pc.spline_intervals = cfg.spline_intervals;
  pc.spline_order = cfg.spline_order;
  prompts_ = PromptGenerator(params_, pc, prompt_rng);
  DecoderConfig dc;
  dc.dim = pc.dim;
  dc.blocks = static_cast<std::size_t>(cfg.decoder_blocks);
  dc.heads = static_cast<std::size_t>(cfg.decoder_heads);
  dc.token_self_attention = cfg.token_self_attention;
  dc.stride = sam2_->stride();
  decoder_ = MaskDecoder(params_, dc, decoder_rng);
}

std::string SegmentationModel::encoder_prefix(EncoderKind kind) {
  return "encoder." + std::string(encoder_name(kind)) + ".";
}

const ImageEncoder& SegmentationModel::encoder(EncoderKind kind) const {
  return kind == EncoderKind::kSam2Stub ? *sam2_ : *pathology_;
}

SegmentationModel::Forward SegmentationModel::forward(ag::Tape& tape,
                                                      const ImageTensor& image) const {
  check_divisible(image.height, image.width, sam2_->stride());
  Forward f;
  const ag::Var a = sam2_->forward(tape, image);
  const ag::Var b = pathology_->forward(tape, image);
  const ag::Var parts[] = {a, b};
  f.fused = ag::concat_cols(parts);
  f.aligned = align_.forward(tape, f.fused);
  f.tokens = prompts_.forward(tape);
  const int grid_h = image.height / sam2_->stride();
  const int grid_w = image.width / sam2_->stride();
  f.decoded = decoder_.forward(tape, f.aligned, grid_h, grid_w, f.tokens);
  return f;
}

SegmentationOutput SegmentationModel::predict(const ImageTensor& image) const {
  ag::Tape tape(false);
  return to_segmentation_output(forward(tape, image).decoded);
}

LabelMap SegmentationModel::predict_labels(const ImageTensor& image) const {
  return predict_semantic(predict(image));
}

}  // namespace kanprompt
