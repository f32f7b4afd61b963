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

// Report artifacts: metric tables, raster plots, qualitative panels and
// raw prediction exports. Plots are written as PNG files only.

#ifndef KANPROMPT_REPORT_HPP_
#define KANPROMPT_REPORT_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "kanprompt/config.hpp"
#include "kanprompt/decoder.hpp"
#include "kanprompt/image_io.hpp"
#include "kanprompt/metrics.hpp"

namespace kanprompt::report {

// class,dsc,iou per class, then a "mean" row.
std::string metric_csv(const metrics::MetricReport& r);
nlohmann::json metric_json(const metrics::MetricReport& r);

// Simple RGB canvas with line, box and 5x7 text drawing.
class Canvas {
 public:
  Canvas(int width, int height, std::uint8_t fill = 255);

  void set(int x, int y, const std::array<std::uint8_t, 3>& c);
  void line(int x0, int y0, int x1, int y1, const std::array<std::uint8_t, 3>& c);
  void fill_rect(int x0, int y0, int x1, int y1, const std::array<std::uint8_t, 3>& c);
  // Upper-case letters, digits and ". - _ : %"; other characters draw blank.
  void text(int x, int y, const std::string& s, const std::array<std::uint8_t, 3>& c,
            int scale = 1);
  void blit(int x, int y, const io::RgbImage& image);
  const io::RgbImage& image() const { return img_; }

 private:
  io::RgbImage img_;
};

// Train loss (left scale) and validation mean IoU (right, [0, 1]) per epoch.
io::RgbImage loss_curve(const std::vector<EpochRecord>& history);
io::RgbImage iou_bars(const metrics::MetricReport& r);

// Distinct colour per class; class 0 is black.
std::array<std::uint8_t, 3> class_color(int label);
io::RgbImage colorize(const LabelMap& labels);
io::RgbImage to_rgb(const ImageTensor& image);
// input | ground truth | prediction, separated by white gutters.
io::RgbImage qualitative_panel(const ImageTensor& image, const LabelMap& truth,
                               const LabelMap& prediction);

// <stem>.npy with shape (k, H, W) of mask logits and <stem>.json with the
// predicted ious.
void export_prediction(const SegmentationOutput& out, const std::filesystem::path& stem);

}  // namespace kanprompt::report

#endif  // KANPROMPT_REPORT_HPP_
