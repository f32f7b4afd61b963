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

#include "kanprompt/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include <json.hpp>

#include "kanprompt/errors.hpp"
#include "kanprompt/image_io.hpp"
#include "kanprompt/random.hpp"

namespace kanprompt {

namespace fs = std::filesystem;

std::string_view split_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::kTrain:
      return "train";
    case SplitTag::kVal:
      return "val";
    case SplitTag::kTest:
      return "test";
  }
  return "train";
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::map<std::string, fs::path> list_files(const fs::path& dir,
                                           std::initializer_list<std::string_view> exts) {
  std::map<std::string, fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = lower(entry.path().extension().string());
    if (std::find(exts.begin(), exts.end(), ext) == exts.end()) continue;
    const std::string stem = entry.path().stem().string();
    if (!out.emplace(stem, entry.path()).second) {
      throw DatasetError("two files share the basename '" + stem + "' in " + dir.string());
    }
  }
  return out;
}

}  // namespace

DatasetIndex load_dataset(const fs::path& root, int num_classes, SplitTag split) {
  if (num_classes < 1 || num_classes > 255) {
    throw InvalidArgument("class count must be in [1, 255], got " + std::to_string(num_classes));
  }
  const fs::path images = root / "images";
  const fs::path masks = root / "masks";
  if (!fs::is_directory(images) || !fs::is_directory(masks)) {
    throw DatasetError("dataset root " + root.string() + " needs images/ and masks/ directories");
  }
  const auto image_files = list_files(images, {".png", ".jpg", ".jpeg"});
  const auto mask_files = list_files(masks, {".png"});
  for (const auto& [stem, path] : image_files) {
    if (!mask_files.contains(stem)) {
      throw DatasetError("image " + path.string() + " has no matching mask in " + masks.string());
    }
  }
  for (const auto& [stem, path] : mask_files) {
    if (!image_files.contains(stem)) {
      throw DatasetError("mask " + path.string() + " has no matching image in " + images.string());
    }
  }
  if (image_files.empty()) throw DatasetError("dataset at " + root.string() + " is empty");

  DatasetIndex dataset{root, num_classes, {}, split};
  for (const auto& [stem, image_path] : image_files) {
    const fs::path& mask_path = mask_files.at(stem);
    const auto [w, h] = io::image_size(image_path);
    const LabelMap mask = io::read_label_png(mask_path);
    if (mask.width != w || mask.height != h) {
      throw DatasetError("mask " + mask_path.string() + " is " + std::to_string(mask.width) +
                         "x" + std::to_string(mask.height) + " but its image is " +
                         std::to_string(w) + "x" + std::to_string(h));
    }
    const auto max_label = *std::max_element(mask.labels.begin(), mask.labels.end());
    if (max_label >= num_classes) {
      throw DatasetError("mask " + mask_path.string() + " contains label " +
                         std::to_string(max_label) + " but the class count is " +
                         std::to_string(num_classes));
    }
    dataset.samples.push_back({stem, image_path, mask_path});
  }
  return dataset;
}

std::pair<DatasetIndex, DatasetIndex> split_train_val(const DatasetIndex& dataset,
                                                    const SplitConfig& cfg) {
  if (!(cfg.val_fraction > 0.0 && cfg.val_fraction < 1.0)) {
    throw InvalidArgument("validation fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.samples.size();
  if (n < 5) {
    throw InvalidArgument("train/val split needs at least 5 samples, got " + std::to_string(n));
  }
  std::vector<Sample> sorted = dataset.samples;
  std::sort(sorted.begin(), sorted.end(),
            [](const Sample& a, const Sample& b) { return a.name < b.name; });
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(cfg.seed ^ 0xD1B54A32D192ED03ull);
  rng.shuffle(order);
  const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(n)));
  std::vector<bool> in_val(n, false);
  for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = true;

  DatasetIndex train{dataset.root, dataset.num_classes, {}, SplitTag::kTrain};
  DatasetIndex val{dataset.root, dataset.num_classes, {}, SplitTag::kVal};
  for (std::size_t i = 0; i < n; ++i) (in_val[i] ? val : train).samples.push_back(sorted[i]);
  return {std::move(train), std::move(val)};
}

namespace {

struct Blob {
  double cx, cy, radius;
  std::array<double, 3> amp;
  std::array<double, 3> phase;

  bool contains(double x, double y) const {
    const double dx = x - cx, dy = y - cy;
    const double theta = std::atan2(dy, dx);
    double r = radius;
    for (int m = 0; m < 3; ++m) r *= 1.0 + amp[m] * std::cos((m + 2) * theta + phase[m]);
    return dx * dx + dy * dy < r * r;
  }
};

std::uint64_t sample_seed(std::uint64_t seed, int index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Stain-like colours: pale eosin background, haematoxylin-tinted glands.
std::array<double, 3> class_colour(int c) {
  static constexpr std::array<std::array<double, 3>, 4> kPalette = {{
      {0.93, 0.78, 0.86},
      {0.52, 0.28, 0.62},
      {0.78, 0.42, 0.52},
      {0.34, 0.36, 0.70},
  }};
  if (c < static_cast<int>(kPalette.size())) return kPalette[c];
  const double t = 0.37 * c;
  return {0.5 + 0.3 * std::sin(t), 0.4 + 0.2 * std::sin(t + 2.1), 0.6 + 0.25 * std::sin(t + 4.2)};
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

void validate_synth(const SynthConfig& cfg) {
  if (cfg.num_classes < 2 || cfg.num_classes > 255) {
    throw InvalidArgument("synthetic data needs 2 <= k <= 255, got " + std::to_string(cfg.num_classes));
  }
  if (cfg.size <= 0 || cfg.size % 16 != 0) {
    throw InvalidArgument("synthetic image size must be a positive multiple of 16, got " +
                          std::to_string(cfg.size));
  }
  if (cfg.count < 1) throw InvalidArgument("synthetic sample count must be >= 1");
  if (!(cfg.min_coverage >= 0.0 && cfg.min_coverage < cfg.max_coverage && cfg.max_coverage <= 1.0)) {
    throw InvalidArgument("coverage band must satisfy 0 <= min < max <= 1");
  }
}

}  // namespace

std::pair<ImageTensor, LabelMap> synth_sample(const SynthConfig& cfg, int index) {
  validate_synth(cfg);
  Rng rng(sample_seed(cfg.seed, index));
  const int s = cfg.size;
  const std::size_t n = static_cast<std::size_t>(s) * s;
  LabelMap mask{s, s, std::vector<std::uint8_t>(n, 0)};

  bool accepted = false;
  for (int attempt = 0; attempt < 500 && !accepted; ++attempt) {
    std::fill(mask.labels.begin(), mask.labels.end(), 0);
    const double per_class = 1.0 / std::sqrt(static_cast<double>(cfg.num_classes - 1));
    for (int c = 1; c < cfg.num_classes; ++c) {
      const int blobs = 1 + static_cast<int>(rng.below(3));
      for (int b = 0; b < blobs; ++b) {
        Blob blob{};
        blob.radius = s * per_class * rng.uniform(0.10, 0.24);
        blob.cx = rng.uniform(0.0, s);
        blob.cy = rng.uniform(0.0, s);
        for (int m = 0; m < 3; ++m) {
          blob.amp[m] = rng.uniform(0.0, 0.12);
          blob.phase[m] = rng.uniform(0.0, 2.0 * std::numbers::pi);
        }
        for (int y = 0; y < s; ++y) {
          for (int x = 0; x < s; ++x) {
            if (blob.contains(x + 0.5, y + 0.5)) mask.labels[static_cast<std::size_t>(y) * s + x] = c;
          }
        }
      }
    }
    std::vector<std::size_t> counts(cfg.num_classes, 0);
    for (auto l : mask.labels) ++counts[l];
    const double coverage = 1.0 - static_cast<double>(counts[0]) / static_cast<double>(n);
    accepted = coverage >= cfg.min_coverage && coverage <= cfg.max_coverage;
    for (int c = 1; c < cfg.num_classes; ++c) accepted = accepted && counts[c] > 0;
  }
  if (!accepted) {
    throw InvalidArgument("could not place glands within the coverage band [" +
                          std::to_string(cfg.min_coverage) + ", " +
                          std::to_string(cfg.max_coverage) + "]");
  }

  // Low-frequency stain variation shared by the whole tile.
  const double fx = rng.uniform(0.5, 2.0) * 2.0 * std::numbers::pi / s;
  const double fy = rng.uniform(0.5, 2.0) * 2.0 * std::numbers::pi / s;
  const double ph = rng.uniform(0.0, 2.0 * std::numbers::pi);
  io::RgbImage rgb{s, s, std::vector<std::uint8_t>(n * 3)};
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * s + x;
      const int c = mask.labels[i];
      bool rim = false;
      if (c != 0) {
        for (int dy = -1; dy <= 1 && !rim; ++dy) {
          for (int dx = -1; dx <= 1 && !rim; ++dx) {
            const int yy = std::clamp(y + dy, 0, s - 1), xx = std::clamp(x + dx, 0, s - 1);
            rim = mask.labels[static_cast<std::size_t>(yy) * s + xx] != c;
          }
        }
      }
      const auto colour = class_colour(c);
      const double shade = 0.04 * std::sin(fx * x + fy * y + ph);
      // Per-class texture frequency keeps classes distinguishable beyond colour.
      const double texture = c == 0 ? 0.0 : 0.05 * std::sin((1.3 + 0.4 * c) * x) * std::cos((1.1 + 0.3 * c) * y);
      for (int ch = 0; ch < 3; ++ch) {
        double v = colour[ch] + shade + texture + 0.03 * rng.normal();
        if (rim) v -= 0.18;
        rgb.rgb[i * 3 + ch] = to_byte(v);
      }
    }
  }
  return {io::to_tensor(rgb), std::move(mask)};
}

DatasetIndex synth_generate(const SynthConfig& cfg, const fs::path& out) {
  validate_synth(cfg);
  fs::create_directories(out / "images");
  fs::create_directories(out / "masks");
  for (int i = 0; i < cfg.count; ++i) {
    const auto [image, mask] = synth_sample(cfg, i);
    char name[32];
    std::snprintf(name, sizeof(name), "sample_%04d.png", i);
    io::RgbImage rgb{image.width, image.height, std::vector<std::uint8_t>(image.pixels.size())};
    for (std::size_t j = 0; j < image.pixels.size(); ++j) {
      rgb.rgb[j] = static_cast<std::uint8_t>(std::lround(image.pixels[j] * 255.0f));
    }
    io::write_png_rgb(out / "images" / name, rgb);
    io::write_label_png(out / "masks" / name, mask);
  }
  nlohmann::ordered_json meta = {
      {"generator", "kanprompt-synth"},
      {"seed", cfg.seed},
      {"count", cfg.count},
      {"num_classes", cfg.num_classes},
      {"size", cfg.size},
      {"min_coverage", cfg.min_coverage},
      {"max_coverage", cfg.max_coverage},
  };
  std::ofstream(out / "synth.json") << meta.dump(2) << "\n";
  return load_dataset(out, cfg.num_classes);
}

LoadedSample load_sample(const Sample& sample) {
  LoadedSample out{sample.name, io::read_image(sample.image), io::read_label_png(sample.mask)};
  if (out.image.width != out.mask.width || out.image.height != out.mask.height) {
    throw DatasetError("image and mask sizes differ for sample " + sample.name);
  }
  return out;
}

std::vector<LoadedSample> load_samples(const DatasetIndex& dataset) {
  std::vector<LoadedSample> out;
  out.reserve(dataset.samples.size());
  for (const auto& s : dataset.samples) out.push_back(load_sample(s));
  return out;
}

}  // namespace kanprompt
