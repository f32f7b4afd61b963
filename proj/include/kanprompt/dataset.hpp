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

// Dataset layout, validation, train/validation splitting and the synthetic
// gland-like dataset generator.
//
// A dataset root holds images/ and masks/ with files matched by basename.
// Masks are single-channel PNGs whose pixel values are class indices.

#ifndef KANPROMPT_DATASET_HPP_
#define KANPROMPT_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kanprompt/tensor.hpp"

namespace kanprompt {

enum class SplitTag { kTrain, kVal, kTest };

std::string_view split_name(SplitTag tag);

struct Sample {
  std::string name;  // shared basename (stem)
  std::filesystem::path image;
  std::filesystem::path mask;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct DatasetIndex {
  std::filesystem::path root;
  int num_classes = 0;
  std::vector<Sample> samples;  // sorted by name
  SplitTag split = SplitTag::kTrain;
};

// Validates every pair: matching basenames, equal sizes, labels < k.
DatasetIndex load_dataset(const std::filesystem::path& root, int num_classes,
                         SplitTag split = SplitTag::kTrain);

struct SplitConfig {
  double val_fraction = 0.20;
  std::uint64_t seed = 0;
};

// Deterministic in (seed, sorted sample names); val holds round(f * N) samples.
std::pair<DatasetIndex, DatasetIndex> split_train_val(const DatasetIndex& dataset,
                                                    const SplitConfig& cfg);

struct SynthConfig {
  std::uint64_t seed = 7;
  int count = 20;
  int num_classes = 2;
  int size = 64;
  // Band for the fraction of pixels covered by any non-background class.
  double min_coverage = 0.10;
  double max_coverage = 0.60;
};

// Writes images/, masks/ and synth.json under `out` and loads the result.
DatasetIndex synth_generate(const SynthConfig& cfg, const std::filesystem::path& out);

// In-memory rendering of synthetic sample `index` (what synth_generate writes).
std::pair<ImageTensor, LabelMap> synth_sample(const SynthConfig& cfg, int index);

struct LoadedSample {
  std::string name;
  ImageTensor image;
  LabelMap mask;
};

LoadedSample load_sample(const Sample& sample);
std::vector<LoadedSample> load_samples(const DatasetIndex& dataset);

}  // namespace kanprompt

#endif  // KANPROMPT_DATASET_HPP_
