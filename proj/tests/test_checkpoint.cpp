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

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "kanprompt/checkpoint.hpp"
#include "kanprompt/errors.hpp"
#include "temp_dir.hpp"

namespace kanprompt {
namespace {

namespace fs = std::filesystem;
using testing_util::TempDir;

ModelConfig small_model(int k) {
  ModelConfig m;
  m.num_classes = k;
  m.encoder.embed_dim = 16;
  m.encoder.depth = 2;
  m.decoder_dim = 32;
  m.seed = 3;
  return m;
}

ImageTensor random_image(int size, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img{size, size, std::vector<float>(static_cast<std::size_t>(size) * size * 3), {}};
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

// Perturbs every parameter so the round trip is not just re-initialization.
void scramble(SegmentationModel& m, std::uint64_t seed) {
  Rng rng(seed);
  for (Parameter* p : m.parameters().all()) {
    for (float& v : p->value) v += static_cast<float>(0.01 * rng.normal());
  }
}

Checkpoint sample_checkpoint(const SegmentationModel& m) {
  TrainConfig cfg;
  cfg.model = m.config();
  cfg.learning_rate = 1e-3;
  cfg.epochs = 2;
  cfg.seed = 11;
  std::vector<EpochRecord> history{{1, 0.75, 0.5, 0.6}, {2, 0.5, 0.625, 0.7}};
  return capture_checkpoint(m, cfg, 2, history);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  TempDir d("ckpt_rt");
  SegmentationModel model(small_model(2));
  scramble(model, 1);
  const Checkpoint ckpt = sample_checkpoint(model);
  checkpoint_save(ckpt, d.path() / "c");
  const Checkpoint loaded = checkpoint_load(d.path() / "c");
  EXPECT_EQ(loaded.version, kCheckpointVersion);
  EXPECT_EQ(loaded.epoch, 2);
  EXPECT_EQ(loaded.history, ckpt.history);
  EXPECT_EQ(nlohmann::json(loaded.config).dump(), nlohmann::json(ckpt.config).dump());
  ASSERT_EQ(loaded.tensors.size(), ckpt.tensors.size());
  for (std::size_t i = 0; i < ckpt.tensors.size(); ++i) {
    EXPECT_EQ(loaded.tensors[i].name, ckpt.tensors[i].name);
    EXPECT_EQ(loaded.tensors[i].shape, ckpt.tensors[i].shape);
    EXPECT_EQ(std::memcmp(loaded.tensors[i].data.data(), ckpt.tensors[i].data.data(),
                          4 * ckpt.tensors[i].data.size()),
              0);
  }
  const auto restored = model_from_checkpoint(loaded);
  const auto img = random_image(32, 2);
  EXPECT_EQ(restored->predict(img), model.predict(img));
}

TEST(Checkpoint, BlobsAreLittleEndianFloat32) {
  TempDir d("ckpt_le");
  SegmentationModel model(small_model(2));
  const Checkpoint ckpt = sample_checkpoint(model);
  checkpoint_save(ckpt, d.path());
  const NamedTensor& t = ckpt.tensors.front();
  const std::string bytes = testing_util::slurp(d.path() / (t.name + ".bin"));
  ASSERT_EQ(bytes.size(), 4 * t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    }
    float v;
    std::memcpy(&v, &bits, 4);
    EXPECT_EQ(v, t.data[i]);
  }
  const auto manifest = nlohmann::json::parse(testing_util::slurp(d.path() / "manifest.json"));
  EXPECT_EQ(manifest.at("version"), kCheckpointVersion);
  EXPECT_EQ(manifest.at("num_classes"), 2);
  EXPECT_TRUE(manifest.at("dims").contains("decoder_dim"));
  EXPECT_EQ(manifest.at("history").size(), 2u);
}

TEST(Checkpoint, TruncatedBlobIsCorruptNotCrash) {
  TempDir d("ckpt_trunc");
  SegmentationModel model(small_model(2));
  checkpoint_save(sample_checkpoint(model), d.path());
  const fs::path blob = d.path() / "decoder.iou_head.fc2.weight.bin";
  ASSERT_TRUE(fs::exists(blob));
  fs::resize_file(blob, fs::file_size(blob) - 3);
  try {
    checkpoint_load(d.path());
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("corrupt"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, OversizedBlobAndGarbageManifestAreCorrupt) {
  TempDir d("ckpt_garbage");
  SegmentationModel model(small_model(2));
  const Checkpoint ckpt = sample_checkpoint(model);
  checkpoint_save(ckpt, d.path());
  {
    std::ofstream(d.path() / (ckpt.tensors[0].name + ".bin"), std::ios::app) << "xx";
  }
  EXPECT_THROW(checkpoint_load(d.path()), CheckpointError);
  checkpoint_save(ckpt, d.path());
  {
    std::ofstream(d.path() / "manifest.json", std::ios::trunc) << "{\"format\": \"kanprompt-chec";
  }
  EXPECT_THROW(checkpoint_load(d.path()), CheckpointError);
  EXPECT_THROW(checkpoint_load(d.path() / "nope"), CheckpointError);
}

TEST(Checkpoint, VersionMismatchRejected) {
  TempDir d("ckpt_version");
  SegmentationModel model(small_model(2));
  checkpoint_save(sample_checkpoint(model), d.path());
  auto manifest = nlohmann::json::parse(testing_util::slurp(d.path() / "manifest.json"));
  manifest["version"] = kCheckpointVersion + 1;
  std::ofstream(d.path() / "manifest.json", std::ios::trunc) << manifest.dump();
  try {
    checkpoint_load(d.path());
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, ClassCountMismatchNamesTensor) {
  SegmentationModel two(small_model(2));
  SegmentationModel three(small_model(3));
  const Checkpoint ckpt = sample_checkpoint(two);
  try {
    restore_parameters(three, ckpt);
    FAIL();
  } catch (const CheckpointError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("shape mismatch"), std::string::npos) << msg;
    EXPECT_NE(msg.find("prompt."), std::string::npos) << msg;
  }
}

TEST(Checkpoint, MissingTensorRejected) {
  SegmentationModel model(small_model(2));
  Checkpoint ckpt = sample_checkpoint(model);
  ckpt.tensors.pop_back();
  EXPECT_THROW(restore_parameters(model, ckpt), CheckpointError);
}

}  // namespace
}  // namespace kanprompt
