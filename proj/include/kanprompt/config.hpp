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

// Training configuration, per-epoch history records and their JSON forms.

#ifndef KANPROMPT_CONFIG_HPP_
#define KANPROMPT_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kanprompt/dataset.hpp"
#include "kanprompt/losses.hpp"
#include "kanprompt/metrics.hpp"
#include "kanprompt/model.hpp"

namespace kanprompt {

struct TrainConfig {
  ModelConfig model;
  double learning_rate = 1e-5;
  double weight_decay = 1e-2;
  int epochs = 100;
  int batch_size = 4;
  std::uint64_t seed = 0;
  loss::LossWeights loss;
  bool freeze_sam2 = false;
  bool freeze_pathology = false;
  metrics::Aggregation aggregation = metrics::Aggregation::kPerSample;
  SplitConfig split;
};

// Throws InvalidArgument on out-of-range settings.
void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mean_iou = 0.0;
  double val_mean_dsc = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

// History CSV with header epoch,train_loss,val_mean_iou,val_mean_dsc.
std::string history_csv(const std::vector<EpochRecord>& history);

void to_json(nlohmann::json& j, const EncoderConfig& c);
void from_json(const nlohmann::json& j, EncoderConfig& c);
void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const EpochRecord& r);
void from_json(const nlohmann::json& j, EpochRecord& r);

}  // namespace kanprompt

#endif  // KANPROMPT_CONFIG_HPP_
