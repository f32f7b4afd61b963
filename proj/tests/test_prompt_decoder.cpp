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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "kanprompt/decoder.hpp"
#include "kanprompt/errors.hpp"
#include "kanprompt/losses.hpp"
#include "kanprompt/model.hpp"
#include "kanprompt/prompt.hpp"

namespace kanprompt {
namespace {

using Net = kan::KanNetwork<double>;

std::shared_ptr<const kan::SplineGrid<double>> grid() {
  return std::make_shared<const kan::SplineGrid<double>>(
      kan::SplineGrid<double>::uniform(8, 3, -1.0, 1.0));
}

ClassEmbeddingTable<double> random_table(std::size_t k, std::size_t d, Rng& rng) {
  ClassEmbeddingTable<double> t{k, d, {}};
  for (std::size_t i = 0; i < k * d; ++i) t.values.push_back(rng.uniform(-1, 1));
  return t;
}

std::vector<Net> random_nets(std::size_t k, std::size_t d, Rng& rng, bool zero = false) {
  std::vector<Net> nets;
  const std::vector<std::size_t> dims{d, d, d, d};
  for (std::size_t i = 0; i < k; ++i) {
    const kan::KanInit init = zero ? kan::KanInit{0.0, 0.0, 0.0} : kan::KanInit{0.0, 1.0, 0.5};
    nets.push_back(kan::make_kan_network<double>(dims, grid(), init, rng));
  }
  return nets;
}

TEST(PromptTokens, ZeroNetworksPassEmbeddingsThrough) {
  Rng rng(1);
  const auto table = random_table(3, 6, rng);
  const auto nets = random_nets(3, 6, rng, true);
  const auto tokens = generate_prompt_tokens<double>(table, nets);
  EXPECT_EQ(tokens.values, table.values);
}

TEST(PromptTokens, SingleClassMatchesDirectEvaluation) {
  Rng rng(2);
  const auto table = random_table(1, 5, rng);
  const auto nets = random_nets(1, 5, rng);
  const auto tokens = generate_prompt_tokens<double>(table, nets);
  const auto y = kan::kan_forward<double>(table.embedding(0), nets[0]);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_EQ(tokens.token(0)[c], y[c] + table.embedding(0)[c]);
}

TEST(PromptTokens, PerClassRecomposition) {
  Rng rng(3);
  const auto table = random_table(3, 4, rng);
  const auto nets = random_nets(3, 4, rng);
  const auto tokens = generate_prompt_tokens<double>(table, nets);
  ASSERT_EQ(tokens.num_classes, 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto y = kan::kan_forward<double>(table.embedding(i), nets[i]);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(tokens.token(i)[c], y[c] + table.embedding(i)[c]);
  }
}

TEST(PromptTokens, ClassCountMismatchIsStructural) {
  Rng rng(4);
  const auto table = random_table(3, 4, rng);
  const auto nets = random_nets(2, 4, rng);
  EXPECT_THROW(generate_prompt_tokens<double>(table, nets), StructuralError);
}

TEST(PromptGenerator, TapeForwardMatchesPureKanRoutines) {
  ParameterSet ps;
  Rng rng(5);
  PromptConfig cfg;
  cfg.num_classes = 3;
  cfg.dim = 16;
  PromptGenerator gen(ps, cfg, rng);
  EXPECT_EQ(gen.network_count(), 3u);
  const auto tokens = gen.tokens();
  std::vector<kan::KanNetwork<float>> nets;
  for (std::size_t i = 0; i < 3; ++i) nets.push_back(gen.kan_network(i));
  const auto want = generate_prompt_tokens<float>(gen.embedding_table(), nets);
  ASSERT_EQ(tokens.values.size(), want.values.size());
  for (std::size_t i = 0; i < want.values.size(); ++i) {
    EXPECT_NEAR(tokens.values[i], want.values[i], 1e-5f);
  }
  // Distinct classes get distinct tokens.
  EXPECT_NE(std::vector<float>(tokens.token(0).begin(), tokens.token(0).end()),
            std::vector<float>(tokens.token(1).begin(), tokens.token(1).end()));
}

TEST(PromptGenerator, SharedAndMlpVariants) {
  for (auto kind : {PromptKind::kKan, PromptKind::kMlp}) {
    for (bool shared : {false, true}) {
      ParameterSet ps;
      Rng rng(6);
      PromptConfig cfg;
      cfg.num_classes = 4;
      cfg.dim = 8;
      cfg.kind = kind;
      cfg.shared_network = shared;
      PromptGenerator gen(ps, cfg, rng);
      EXPECT_EQ(gen.network_count(), shared ? 1u : 4u);
      const auto t = gen.tokens();
      EXPECT_EQ(t.num_classes, 4u);
      EXPECT_EQ(t.dim, 8u);
      for (float v : t.values) EXPECT_TRUE(std::isfinite(v));
    }
  }
  EXPECT_EQ(parse_prompt_kind("mlp"), PromptKind::kMlp);
  EXPECT_EQ(parse_prompt_kind("kan"), PromptKind::kKan);
  EXPECT_THROW(parse_prompt_kind("rbf"), InvalidArgument);
}

FeatureMap random_aligned(int h, int w, int d, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMap f{h, w, Tensor(static_cast<std::size_t>(h) * w, d)};
  for (float& v : f.values.data) v = static_cast<float>(rng.normal());
  return f;
}

PromptTokenSet<float> random_tokens(std::size_t k, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  PromptTokenSet<float> t{k, d, {}};
  for (std::size_t i = 0; i < k * d; ++i) t.values.push_back(static_cast<float>(rng.normal()));
  return t;
}

TEST(Decoder, ShapeContractAndIouRange) {
  ParameterSet ps;
  Rng rng(7);
  DecoderConfig cfg;
  cfg.dim = 32;
  const MaskDecoder dec(ps, cfg, rng);
  for (std::size_t k : {1u, 2u, 4u}) {
    for (int size : {32, 64}) {
      const auto out = decode(random_aligned(size / 16, size / 16, 32, 8 + k), random_tokens(k, 32, k), dec);
      EXPECT_EQ(out.num_classes, k);
      EXPECT_EQ(out.height, size);
      EXPECT_EQ(out.width, size);
      EXPECT_EQ(out.mask_logits.size(), k * size * size);
      ASSERT_EQ(out.ious.size(), k);
      for (float v : out.ious) {
        EXPECT_GT(v, 0.0f);
        EXPECT_LT(v, 1.0f);
      }
    }
  }
}

TEST(Decoder, DuplicateTokensGiveIdenticalPlanes) {
  ParameterSet ps;
  Rng rng(9);
  DecoderConfig cfg;
  cfg.dim = 32;
  const MaskDecoder dec(ps, cfg, rng);
  auto tokens = random_tokens(3, 32, 10);
  std::copy(tokens.token(0).begin(), tokens.token(0).end(), tokens.values.begin() + 2 * 32);
  const auto out = decode(random_aligned(4, 4, 32, 11), tokens, dec);
  const auto p0 = out.plane(0), p1 = out.plane(1), p2 = out.plane(2);
  EXPECT_TRUE(std::equal(p0.begin(), p0.end(), p2.begin()));
  EXPECT_FALSE(std::equal(p0.begin(), p0.end(), p1.begin()));
  EXPECT_EQ(out.ious[0], out.ious[2]);
}

TEST(Decoder, DimMismatchIsStructural) {
  ParameterSet ps;
  Rng rng(12);
  DecoderConfig cfg;
  cfg.dim = 32;
  const MaskDecoder dec(ps, cfg, rng);
  EXPECT_THROW(decode(random_aligned(4, 4, 16, 1), random_tokens(2, 32, 2), dec), StructuralError);
  EXPECT_THROW(decode(random_aligned(4, 4, 32, 1), random_tokens(2, 16, 2), dec), StructuralError);
}

TEST(PredictSemantic, SingleClassAndDominance) {
  SegmentationOutput one{1, 2, 2, {0.3f, -1.0f, 5.0f, 0.0f}, {0.5f}};
  EXPECT_EQ(predict_semantic(one).labels, std::vector<std::uint8_t>(4, 0));
  SegmentationOutput dom{3, 2, 2, {}, {0.5f, 0.5f, 0.5f}};
  dom.mask_logits = {0, 0, 0, 0, 9, 9, 9, 9, 1, 1, 1, 1};
  EXPECT_EQ(predict_semantic(dom).labels, std::vector<std::uint8_t>(4, 1));
  SegmentationOutput tie{2, 1, 1, {2.0f, 2.0f}, {0.5f, 0.5f}};
  EXPECT_EQ(predict_semantic(tie).labels[0], 0);
}

TEST(PredictSemantic, MatchesBruteForceArgmax) {
  Rng rng(13);
  SegmentationOutput out{3, 8, 8, {}, {0.1f, 0.2f, 0.3f}};
  for (int i = 0; i < 3 * 64; ++i) out.mask_logits.push_back(static_cast<float>(rng.below(5)) - 2.0f);
  const auto labels = predict_semantic(out);
  for (int p = 0; p < 64; ++p) {
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      bool beats_all = true;
      for (int o = 0; o < 3; ++o) {
        if (o == c) continue;
        const float a = out.mask_logits[c * 64 + p], b = out.mask_logits[o * 64 + p];
        if (a < b || (a == b && o < c)) beats_all = false;
      }
      if (beats_all) best = c;
    }
    EXPECT_EQ(labels.labels[p], best) << p;
  }
}

ModelConfig small_model(int k, PromptKind kind = PromptKind::kKan) {
  ModelConfig m;
  m.num_classes = k;
  m.encoder.embed_dim = 16;
  m.encoder.depth = 2;
  m.decoder_dim = 32;
  m.prompt_kind = kind;
  return m;
}

ImageTensor random_image(int size, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img{size, size, std::vector<float>(static_cast<std::size_t>(size) * size * 3), {}};
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

TEST(Model, GradientReachesEveryParameter) {
  for (auto kind : {PromptKind::kKan, PromptKind::kMlp}) {
    SegmentationModel model(small_model(2, kind));
    const auto img = random_image(32, 14);
    LabelMap mask{32, 32, std::vector<std::uint8_t>(32 * 32, 0)};
    for (int i = 0; i < 32 * 32; i += 3) mask.labels[i] = 1;
    model.parameters().zero_grad();
    ag::Tape tape;
    const auto fwd = model.forward(tape, img);
    const auto r = loss::hybrid_loss<float>(tape.value(fwd.decoded.mask_logits).data,
                                            tape.value(fwd.decoded.ious).data, mask.labels, 2, {});
    tape.seed(fwd.decoded.mask_logits, r.grad_logits);
    tape.seed(fwd.decoded.ious, r.grad_ious);
    tape.backward();
    for (const Parameter* p : model.parameters().all()) {
      double norm = 0.0;
      for (float g : p->grad) norm += std::abs(g);
      EXPECT_GT(norm, 0.0) << p->name;
    }
  }
}

TEST(Model, PredictShapesAndDeterminism) {
  for (int k : {1, 2, 4}) {
    SegmentationModel a(small_model(k)), b(small_model(k));
    const auto img = random_image(64, 15);
    const auto out = a.predict(img);
    EXPECT_EQ(out.num_classes, static_cast<std::size_t>(k));
    EXPECT_EQ(out.height, 64);
    EXPECT_EQ(out, b.predict(img));
    const auto labels = a.predict_labels(img);
    for (auto v : labels.labels) EXPECT_LT(v, k);
  }
}

TEST(Model, RejectsIndivisibleImages) {
  SegmentationModel m(small_model(2));
  EXPECT_THROW(m.predict(random_image(40, 1)), InvalidArgument);
}

}  // namespace
}  // namespace kanprompt
