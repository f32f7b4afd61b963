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

// Training loop, evaluation and the KAN-vs-MLP prompt ablation.

#ifndef KANPROMPT_TRAINER_HPP_
#define KANPROMPT_TRAINER_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kanprompt/checkpoint.hpp"
#include "kanprompt/config.hpp"
#include "kanprompt/dataset.hpp"
#include "kanprompt/metrics.hpp"
#include "kanprompt/model.hpp"

namespace kanprompt {

struct TrainResult {
  Checkpoint best;  // highest validation mean IoU, earliest on ties
  Checkpoint last;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Applies the freeze flags of `cfg` to `model` and trains it in place.
// Samples are visited in a seed-determined order that is reshuffled every
// epoch; gradients are averaged over each batch. An empty validation set
// falls back to scoring the training set. Throws DivergenceError on a
// non-finite loss.
TrainResult train(SegmentationModel& model, const std::vector<LoadedSample>& train_set,
                  const std::vector<LoadedSample>& val_set, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});
TrainResult train(SegmentationModel& model, const DatasetIndex& train_data,
                  const DatasetIndex& val_data, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

// One training sample's forward and backward pass; gradients accumulate
// into the model's parameters scaled by `grad_scale`. Returns the loss.
double accumulate_sample_gradients(SegmentationModel& model, const LoadedSample& sample,
                                   const loss::LossWeights& weights, float grad_scale);

metrics::MetricReport evaluate(const SegmentationModel& model,
                               const std::vector<LoadedSample>& samples,
                               metrics::Aggregation mode = metrics::Aggregation::kPerSample);
metrics::MetricReport evaluate(const SegmentationModel& model, const DatasetIndex& dataset,
                               metrics::Aggregation mode = metrics::Aggregation::kPerSample);
// Rejects a checkpoint whose class count differs from the dataset's.
metrics::MetricReport evaluate(const Checkpoint& ckpt, const DatasetIndex& dataset,
                               metrics::Aggregation mode = metrics::Aggregation::kPerSample);
metrics::MetricReport evaluate_label_maps(const std::vector<LabelMap>& predictions,
                                          const std::vector<LabelMap>& truths, int num_classes,
                                          metrics::Aggregation mode = metrics::Aggregation::kPerSample);

struct NamedDataset {
  std::string name;
  DatasetIndex train;                // split into train/val by the config
  std::optional<DatasetIndex> test;  // scored when present, else val
};

struct AblationRow {
  std::string model;  // "w.o. KAN" or "w. KAN"
  std::vector<metrics::MetricReport> reports;  // one per dataset
};

struct AblationTable {
  std::vector<std::string> datasets;
  std::vector<AblationRow> rows;  // mlp first, then kan
  // Mean IoU of the KAN row is at least the MLP row's on every dataset.
  bool kan_at_least_mlp = false;

  // Header model,<ds>_DSC,<ds>_IOU,... then one line per row.
  std::string csv() const;
};

// Trains the same configuration twice, differing only in prompt kind.
AblationTable ablate(const TrainConfig& base, const std::vector<NamedDataset>& datasets);

}  // namespace kanprompt

#endif  // KANPROMPT_TRAINER_HPP_
