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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "kanprompt/dataset.hpp"
#include "kanprompt/errors.hpp"
#include "kanprompt/image_io.hpp"
#include "temp_dir.hpp"

namespace kanprompt {
namespace {

namespace fs = std::filesystem;

using testing_util::TempDir;
using testing_util::slurp;

void write_pair(const fs::path& root, const std::string& stem, int h, int w, std::uint8_t label) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "masks");
  io::RgbImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3, 128)};
  io::write_png_rgb(root / "images" / (stem + ".png"), img);
  LabelMap m{h, w, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h, 0)};
  m.labels[0] = label;
  io::write_label_png(root / "masks" / (stem + ".png"), m);
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

TEST(LoadDataset, MatchedPairs) {
  TempDir d("kp_ds_ok");
  for (int i = 0; i < 10; ++i) write_pair(d.path(), "s" + std::to_string(i), 16, 16, i % 2);
  const auto dataset = load_dataset(d.path(), 2);
  EXPECT_EQ(dataset.samples.size(), 10u);
  EXPECT_EQ(dataset.num_classes, 2);
  EXPECT_TRUE(std::is_sorted(dataset.samples.begin(), dataset.samples.end(),
                             [](const Sample& a, const Sample& b) { return a.name < b.name; }));
}

TEST(LoadDataset, LabelOutOfRangeCitesFileAndValue) {
  TempDir d("kp_ds_label");
  write_pair(d.path(), "good", 16, 16, 1);
  write_pair(d.path(), "bad", 16, 16, 5);
  const auto msg = error_of([&] { load_dataset(d.path(), 2); });
  EXPECT_NE(msg.find("bad.png"), std::string::npos) << msg;
  EXPECT_NE(msg.find('5'), std::string::npos) << msg;
  EXPECT_THROW(load_dataset(d.path(), 2), DatasetError);
}

TEST(LoadDataset, EmptyAndMissingDirectories) {
  TempDir d("kp_ds_empty");
  EXPECT_THROW(load_dataset(d.path(), 2), DatasetError);
  fs::create_directories(d.path() / "images");
  fs::create_directories(d.path() / "masks");
  const auto msg = error_of([&] { load_dataset(d.path(), 2); });
  EXPECT_NE(msg.find("empty"), std::string::npos) << msg;
}

TEST(LoadDataset, OrphansAreNamed) {
  TempDir d("kp_ds_orphan");
  write_pair(d.path(), "a", 16, 16, 0);
  write_pair(d.path(), "b", 16, 16, 0);
  fs::remove(d.path() / "masks" / "b.png");
  auto msg = error_of([&] { load_dataset(d.path(), 2); });
  EXPECT_NE(msg.find("b.png"), std::string::npos) << msg;
  write_pair(d.path(), "b", 16, 16, 0);
  fs::remove(d.path() / "images" / "a.png");
  msg = error_of([&] { load_dataset(d.path(), 2); });
  EXPECT_NE(msg.find("a.png"), std::string::npos) << msg;
}

TEST(LoadDataset, SizeMismatchRejected) {
  TempDir d("kp_ds_size");
  write_pair(d.path(), "a", 16, 16, 0);
  LabelMap m{32, 16, std::vector<std::uint8_t>(32 * 16, 0)};
  io::write_label_png(d.path() / "masks" / "a.png", m);
  EXPECT_THROW(load_dataset(d.path(), 2), DatasetError);
}

DatasetIndex fake_dataset(int n) {
  DatasetIndex s;
  s.num_classes = 2;
  for (int i = 0; i < n; ++i) {
    const std::string name = "s" + std::to_string(100 + i);
    s.samples.push_back({name, name + ".png", name + ".png"});
  }
  return s;
}

TEST(Split, SizesFollowFraction) {
  const auto [tr, va] = split_train_val(fake_dataset(10), {0.2, 1});
  EXPECT_EQ(tr.samples.size(), 8u);
  EXPECT_EQ(va.samples.size(), 2u);
  EXPECT_EQ(tr.split, SplitTag::kTrain);
  EXPECT_EQ(va.split, SplitTag::kVal);
  const auto [tr2, va2] = split_train_val(fake_dataset(100), {0.2, 7});
  EXPECT_EQ(va2.samples.size(), 20u);
  const auto [tr3, va3] = split_train_val(fake_dataset(7), {0.2, 7});
  EXPECT_EQ(va3.samples.size(), 1u);  // round(1.4)
}

TEST(Split, DeterministicAndSeedDependent) {
  const auto a = split_train_val(fake_dataset(30), {0.2, 3});
  const auto b = split_train_val(fake_dataset(30), {0.2, 3});
  EXPECT_EQ(a.first.samples, b.first.samples);
  EXPECT_EQ(a.second.samples, b.second.samples);
  const auto c = split_train_val(fake_dataset(30), {0.2, 4});
  EXPECT_NE(a.second.samples, c.second.samples);
}

TEST(Split, SetAlgebra) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto dataset = fake_dataset(23);
    const auto [tr, va] = split_train_val(dataset, {0.2, seed});
    std::set<std::string> all, t, v;
    for (const auto& s : dataset.samples) all.insert(s.name);
    for (const auto& s : tr.samples) t.insert(s.name);
    for (const auto& s : va.samples) v.insert(s.name);
    EXPECT_EQ(t.size(), tr.samples.size());
    EXPECT_EQ(v.size(), va.samples.size());
    std::set<std::string> uni, inter;
    std::set_union(t.begin(), t.end(), v.begin(), v.end(), std::inserter(uni, uni.begin()));
    std::set_intersection(t.begin(), t.end(), v.begin(), v.end(), std::inserter(inter, inter.begin()));
    EXPECT_EQ(uni, all);
    EXPECT_TRUE(inter.empty());
  }
}

TEST(Split, RejectsTooFewAndBadFraction) {
  EXPECT_THROW(split_train_val(fake_dataset(4), {0.2, 0}), InvalidArgument);
  EXPECT_THROW(split_train_val(fake_dataset(10), {0.0, 0}), InvalidArgument);
  EXPECT_THROW(split_train_val(fake_dataset(10), {1.0, 0}), InvalidArgument);
}


TEST(Synth, LabelRangeAndCount) {
  TempDir d("kp_synth_a");
  SynthConfig cfg;
  const auto dataset = synth_generate(cfg, d.path() / "data");
  ASSERT_EQ(dataset.samples.size(), 20u);
  for (const auto& s : load_samples(dataset)) {
    EXPECT_EQ(s.mask.height, 64);
    for (auto v : s.mask.labels) EXPECT_LE(v, 1);
  }
}

TEST(Synth, SameSeedGivesByteIdenticalFiles) {
  TempDir d("kp_synth_b");
  SynthConfig cfg;
  cfg.count = 5;
  synth_generate(cfg, d.path() / "x");
  synth_generate(cfg, d.path() / "y");
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d.path() / "x")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), d.path() / "x");
    EXPECT_EQ(slurp(e.path()), slurp(d.path() / "y" / rel)) << rel;
    ++files;
  }
  EXPECT_EQ(files, 11u);
  cfg.seed = 8;
  synth_generate(cfg, d.path() / "z");
  EXPECT_NE(slurp(d.path() / "x" / "masks" / "sample_0000.png"),
            slurp(d.path() / "z" / "masks" / "sample_0000.png"));
}

TEST(Synth, CoverageWithinBandMeasuredOnEmittedMasks) {
  TempDir d("kp_synth_c");
  for (int k : {2, 3}) {
    SynthConfig cfg;
    cfg.num_classes = k;
    cfg.count = 12;
    const auto dataset = synth_generate(cfg, d.path() / ("k" + std::to_string(k)));
    for (const auto& s : dataset.samples) {
      const LabelMap m = io::read_label_png(s.mask);
      std::vector<std::size_t> counts(k, 0);
      for (auto v : m.labels) ++counts.at(v);
      const double fg = 1.0 - static_cast<double>(counts[0]) / m.labels.size();
      EXPECT_GE(fg, cfg.min_coverage) << s.name;
      EXPECT_LE(fg, cfg.max_coverage) << s.name;
      for (int c = 1; c < k; ++c) EXPECT_GT(counts[c], 0u) << s.name << " class " << c;
    }
  }
}

TEST(Synth, ClassesHaveDistinctColourStatistics) {
  SynthConfig cfg;
  cfg.num_classes = 3;
  std::vector<std::array<double, 3>> sum(3, {0, 0, 0});
  std::vector<double> n(3, 0);
  for (int i = 0; i < 6; ++i) {
    const auto [img, mask] = synth_sample(cfg, i);
    for (std::size_t p = 0; p < mask.labels.size(); ++p) {
      const int c = mask.labels[p];
      for (int ch = 0; ch < 3; ++ch) sum[c][ch] += img.pixels[p * 3 + ch];
      n[c] += 1;
    }
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      double dist = 0;
      for (int ch = 0; ch < 3; ++ch) dist += std::abs(sum[a][ch] / n[a] - sum[b][ch] / n[b]);
      EXPECT_GT(dist, 0.05) << a << " vs " << b;
    }
  }
}

TEST(Synth, RejectsBadSizes) {
  TempDir d("kp_synth_d");
  SynthConfig cfg;
  cfg.size = 40;
  EXPECT_THROW(synth_generate(cfg, d.path()), InvalidArgument);
  cfg.size = 64;
  cfg.num_classes = 1;
  EXPECT_THROW(synth_generate(cfg, d.path()), InvalidArgument);
}

}  // namespace
}  // namespace kanprompt
