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

// Image encoders, channel fusion of their outputs, and the dimension
// alignment projection that feeds the mask decoder.
//
// Any encoder that maps an H x W image to an (H/16) x (W/16) grid can be
// plugged in through ImageEncoder; the two stubs are small trainable
// transformer towers standing in for pretrained backbones, and
// FeatureFileEncoder reads features exported by an external model.

#ifndef KANPROMPT_ENCODERS_HPP_
#define KANPROMPT_ENCODERS_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "kanprompt/autograd.hpp"
#include "kanprompt/layers.hpp"
#include "kanprompt/tensor.hpp"

namespace kanprompt {

enum class EncoderKind { kSam2Stub, kPathologyStub };

std::string_view encoder_name(EncoderKind kind);
EncoderKind parse_encoder_kind(std::string_view name);

struct EncoderConfig {
  int embed_dim = 64;
  int depth = 4;
  int patch_stride = 16;
  int heads = 2;
  int mlp_ratio = 2;
  std::uint64_t seed = 0;
};

// Throws InvalidArgument naming the padding needed when the image grid does
// not divide by `stride`.
void check_divisible(int height, int width, int stride);

class ImageEncoder {
 public:
  virtual ~ImageEncoder() = default;

  virtual EncoderKind kind() const = 0;
  virtual int channels() const = 0;
  virtual int stride() const { return 16; }
  // Returns an (H/stride * W/stride) x channels() variable, one row per cell.
  virtual ag::Var forward(ag::Tape& tape, const ImageTensor& image) const = 0;

  FeatureMap encode(const ImageTensor& image) const;
};

// Two-stage patchify-plus-attention tower. Stage one embeds stride/2 patches
// at half width, stage two merges 2x2 neighbourhoods to the full stride.
// The pathology stub sees optical-density channels instead of raw RGB.
class StubEncoder : public ImageEncoder {
 public:
  StubEncoder(EncoderKind kind, const EncoderConfig& cfg, ParameterSet& params);

  EncoderKind kind() const override { return kind_; }
  int channels() const override { return cfg_.embed_dim; }
  int stride() const override { return cfg_.patch_stride; }
  ag::Var forward(ag::Tape& tape, const ImageTensor& image) const override;

  // Parameter-name prefix, e.g. "encoder.sam2_stub.".
  std::string prefix() const;

 private:
  EncoderKind kind_;
  EncoderConfig cfg_;
  nn::Linear embed_;
  std::vector<nn::TransformerBlock> stage1_;
  nn::LayerNorm merge_norm_;
  nn::Linear merge_;
  std::vector<nn::TransformerBlock> stage2_;
  nn::LayerNorm out_norm_;
};

// Reads precomputed features from <dataset>/features/<encoder name>/<stem>.npy,
// where <dataset> is the parent of the image's directory. Arrays are float32
// with shape (H/16, W/16, channels).
class FeatureFileEncoder : public ImageEncoder {
 public:
  FeatureFileEncoder(EncoderKind kind, int channels) : kind_(kind), channels_(channels) {}

  EncoderKind kind() const override { return kind_; }
  int channels() const override { return channels_; }
  ag::Var forward(ag::Tape& tape, const ImageTensor& image) const override;

  std::filesystem::path feature_path(const ImageTensor& image) const;

 private:
  EncoderKind kind_;
  int channels_;
};

// Runs a freshly initialized stub encoder (parameters drawn from cfg.seed).
FeatureMap encode_backbone(const ImageTensor& image, EncoderKind which, const EncoderConfig& cfg);

// Channel concatenation: [a | b] per cell.
FeatureMap fuse_features(const FeatureMap& a, const FeatureMap& b);

// Per-cell linear projection to `dim` channels followed by layer normalization.
class DimensionAlign {
 public:
  DimensionAlign() = default;
  DimensionAlign(ParameterSet& params, const std::string& name, int in_channels, int dim,
                 Rng& rng);

  ag::Var forward(ag::Tape& tape, ag::Var fused) const;
  int in_channels() const { return in_channels_; }
  int dim() const { return dim_; }
  // Identity projection (requires dim == in_channels), zero bias, unit norm.
  void set_identity();
  Parameter& projection() const { return proj_.weight(); }

 private:
  int in_channels_ = 0;
  int dim_ = 0;
  nn::Linear proj_;
  nn::LayerNorm norm_;
};

FeatureMap dimension_align(const FeatureMap& fused, const DimensionAlign& align);

}  // namespace kanprompt

#endif  // KANPROMPT_ENCODERS_HPP_
