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

#include "kanprompt/encoders.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "kanprompt/errors.hpp"
#include "kanprompt/image_io.hpp"

namespace kanprompt {

std::string_view encoder_name(EncoderKind kind) {
  return kind == EncoderKind::kSam2Stub ? "sam2_stub" : "pathology_stub";
}

EncoderKind parse_encoder_kind(std::string_view name) {
  if (name == "sam2_stub") return EncoderKind::kSam2Stub;
  if (name == "pathology_stub") return EncoderKind::kPathologyStub;
  throw InvalidArgument("unknown encoder '" + std::string(name) +
                        "' (expected sam2_stub or pathology_stub)");
}

void check_divisible(int height, int width, int stride) {
  if (height <= 0 || width <= 0) throw InvalidArgument("image has no pixels");
  if (height % stride == 0 && width % stride == 0) return;
  const int pad_h = (stride - height % stride) % stride;
  const int pad_w = (stride - width % stride) % stride;
  std::ostringstream msg;
  msg << "image " << height << "x" << width << " is not divisible by the encoder stride "
      << stride << "; pad to " << height + pad_h << "x" << width + pad_w << " (+" << pad_h
      << " rows, +" << pad_w << " columns)";
  throw InvalidArgument(msg.str());
}

FeatureMap ImageEncoder::encode(const ImageTensor& image) const {
  ag::Tape tape(false);
  const ag::Var v = forward(tape, image);
  return FeatureMap{image.height / stride(), image.width / stride(), v.value()};
}

namespace {

std::uint64_t encoder_seed(EncoderKind kind, std::uint64_t seed) {
  return seed * 0x2545F4914F6CDD1Dull + (kind == EncoderKind::kSam2Stub ? 0x51ull : 0xA7ull);
}

}  // namespace

StubEncoder::StubEncoder(EncoderKind kind, const EncoderConfig& cfg, ParameterSet& params)
    : kind_(kind), cfg_(cfg) {
  if (cfg.patch_stride < 2 || cfg.patch_stride % 2 != 0) {
    throw InvalidArgument("encoder patch stride must be even, got " +
                          std::to_string(cfg.patch_stride));
  }
  if (cfg.embed_dim < 2 || cfg.embed_dim % 2 != 0 || cfg.depth < 2) {
    throw InvalidArgument("encoder needs an even embed dim and depth >= 2");
  }
  Rng rng(encoder_seed(kind, cfg.seed));
  const std::string name = prefix();
  const std::size_t half = cfg.embed_dim / 2;
  const std::size_t full = cfg.embed_dim;
  const std::size_t patch = static_cast<std::size_t>(cfg.patch_stride / 2);
  embed_ = nn::Linear(params, name + "embed", patch * patch * 3, half, rng);
  const int first = cfg.depth / 2;
  for (int b = 0; b < first; ++b) {
    stage1_.emplace_back(params, name + "stage1.block" + std::to_string(b), half, cfg.heads,
                         cfg.mlp_ratio, rng);
  }
  merge_norm_ = nn::LayerNorm(params, name + "merge.norm", 4 * half);
  merge_ = nn::Linear(params, name + "merge.proj", 4 * half, full, rng);
  for (int b = first; b < cfg.depth; ++b) {
    stage2_.emplace_back(params, name + "stage2.block" + std::to_string(b - first), full,
                         cfg.heads, cfg.mlp_ratio, rng);
  }
  out_norm_ = nn::LayerNorm(params, name + "out_norm", full);
}

std::string StubEncoder::prefix() const {
  return "encoder." + std::string(encoder_name(kind_)) + ".";
}

ag::Var StubEncoder::forward(ag::Tape& tape, const ImageTensor& image) const {
  check_divisible(image.height, image.width, cfg_.patch_stride);
  const int patch = cfg_.patch_stride / 2;
  const int h1 = image.height / patch;
  const int w1 = image.width / patch;
  const std::size_t patch_len = static_cast<std::size_t>(patch) * patch * 3;
  Tensor patches(static_cast<std::size_t>(h1) * w1, patch_len);
  const bool density = kind_ == EncoderKind::kPathologyStub;
  for (int y = 0; y < h1; ++y) {
    for (int x = 0; x < w1; ++x) {
      float* row = patches.data.data() + (static_cast<std::size_t>(y) * w1 + x) * patch_len;
      std::size_t i = 0;
      for (int py = 0; py < patch; ++py) {
        for (int px = 0; px < patch; ++px) {
          for (int c = 0; c < 3; ++c) {
            const float v = image.at(y * patch + py, x * patch + px, c);
            // Optical density is the natural space for stain absorbance.
            row[i++] = density ? -std::log((v + 0.01f) / 1.01f) - 0.5f : (v - 0.5f) * 4.0f;
          }
        }
      }
    }
  }
  const std::size_t half = cfg_.embed_dim / 2;
  ag::Var x = embed_(tape, tape.constant(std::move(patches)));
  x = ag::add(x, tape.constant(nn::sinusoidal_positions(h1, w1, half)));
  for (const auto& block : stage1_) x = block(tape, x);
  x = merge_(tape, merge_norm_(tape, nn::merge_patches2(x, h1, w1)));
  x = ag::add(x, tape.constant(nn::sinusoidal_positions(h1 / 2, w1 / 2, cfg_.embed_dim)));
  for (const auto& block : stage2_) x = block(tape, x);
  return out_norm_(tape, x);
}

std::filesystem::path FeatureFileEncoder::feature_path(const ImageTensor& image) const {
  if (image.source.empty()) {
    throw InvalidArgument("precomputed features need the image's source path");
  }
  const std::filesystem::path src(image.source);
  return src.parent_path().parent_path() / "features" / std::string(encoder_name(kind_)) /
         (src.stem().string() + ".npy");
}

ag::Var FeatureFileEncoder::forward(ag::Tape& tape, const ImageTensor& image) const {
  check_divisible(image.height, image.width, stride());
  const auto path = feature_path(image);
  io::NpyArray arr = io::read_npy(path);
  const std::size_t h = image.height / stride();
  const std::size_t w = image.width / stride();
  if (arr.shape.size() != 3 || arr.shape[0] != h || arr.shape[1] != w ||
      arr.shape[2] != static_cast<std::size_t>(channels_)) {
    std::ostringstream msg;
    msg << path.string() << ": expected feature shape (" << h << ", " << w << ", " << channels_
        << "), got (";
    for (std::size_t i = 0; i < arr.shape.size(); ++i) msg << (i ? ", " : "") << arr.shape[i];
    msg << ")";
    throw StructuralError(msg.str());
  }
  return tape.constant(Tensor(h * w, channels_, std::move(arr.data)));
}

FeatureMap encode_backbone(const ImageTensor& image, EncoderKind which,
                           const EncoderConfig& cfg) {
  ParameterSet params;
  const StubEncoder encoder(which, cfg, params);
  return encoder.encode(image);
}

FeatureMap fuse_features(const FeatureMap& a, const FeatureMap& b) {
  if (a.height != b.height || a.width != b.width) {
    std::ostringstream msg;
    msg << "fuse_features: spatial grids differ, " << a.height << "x" << a.width << "x"
        << a.channels() << " vs " << b.height << "x" << b.width << "x" << b.channels();
    throw StructuralError(msg.str());
  }
  const std::size_t ca = a.values.cols, cb = b.values.cols;
  FeatureMap out{a.height, a.width, Tensor(a.values.rows, ca + cb)};
  for (std::size_t r = 0; r < a.values.rows; ++r) {
    auto dst = out.values.data.begin() + r * (ca + cb);
    std::copy(a.values.data.begin() + r * ca, a.values.data.begin() + (r + 1) * ca, dst);
    std::copy(b.values.data.begin() + r * cb, b.values.data.begin() + (r + 1) * cb, dst + ca);
  }
  return out;
}

DimensionAlign::DimensionAlign(ParameterSet& params, const std::string& name, int in_channels,
                               int dim, Rng& rng)
    : in_channels_(in_channels), dim_(dim) {
  if (dim <= 0) throw InvalidArgument("dimension_align: target dim must be positive");
  if (in_channels <= 0) throw InvalidArgument("dimension_align: input needs channels");
  proj_ = nn::Linear(params, name + ".proj", in_channels, dim, rng);
  norm_ = nn::LayerNorm(params, name + ".norm", dim);
}

ag::Var DimensionAlign::forward(ag::Tape& tape, ag::Var fused) const {
  if (fused.cols() != static_cast<std::size_t>(in_channels_)) {
    throw StructuralError("dimension_align: expected " + std::to_string(in_channels_) +
                          " channels, got " + std::to_string(fused.cols()));
  }
  return norm_(tape, proj_(tape, fused));
}

void DimensionAlign::set_identity() {
  if (dim_ != in_channels_) {
    throw StructuralError("identity alignment needs dim == input channels");
  }
  auto& w = proj_.weight().value;
  std::fill(w.begin(), w.end(), 0.0f);
  for (int i = 0; i < dim_; ++i) w[static_cast<std::size_t>(i) * dim_ + i] = 1.0f;
  if (proj_.bias() != nullptr) std::fill(proj_.bias()->value.begin(), proj_.bias()->value.end(), 0.0f);
  std::fill(norm_.gamma().value.begin(), norm_.gamma().value.end(), 1.0f);
  std::fill(norm_.beta().value.begin(), norm_.beta().value.end(), 0.0f);
}

FeatureMap dimension_align(const FeatureMap& fused, const DimensionAlign& align) {
  ag::Tape tape(false);
  const ag::Var out = align.forward(tape, tape.constant(fused.values));
  return FeatureMap{fused.height, fused.width, out.value()};
}

}  // namespace kanprompt
