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

// Checkpoints: a directory holding manifest.json plus one little-endian
// float32 blob per named parameter tensor.

#ifndef KANPROMPT_CHECKPOINT_HPP_
#define KANPROMPT_CHECKPOINT_HPP_

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "kanprompt/config.hpp"
#include "kanprompt/model.hpp"

namespace kanprompt {

inline constexpr int kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<float> data;
};

struct Checkpoint {
  int version = kCheckpointVersion;
  TrainConfig config;
  int epoch = 0;
  std::vector<EpochRecord> history;
  std::vector<NamedTensor> tensors;  // model registration order
};

Checkpoint capture_checkpoint(const SegmentationModel& model, const TrainConfig& config,
                              int epoch, std::vector<EpochRecord> history);

// Copies tensors into `model`; every model parameter must be present with
// the same shape, and the checkpoint may not carry extra tensors.
void restore_parameters(SegmentationModel& model, const Checkpoint& ckpt);

std::unique_ptr<SegmentationModel> model_from_checkpoint(const Checkpoint& ckpt);

void checkpoint_save(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint checkpoint_load(const std::filesystem::path& dir);

}  // namespace kanprompt

#endif  // KANPROMPT_CHECKPOINT_HPP_
