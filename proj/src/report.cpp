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

#include "kanprompt/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "kanprompt/errors.hpp"

namespace kanprompt::report {

namespace {

using Color = std::array<std::uint8_t, 3>;

constexpr Color kBlack{0, 0, 0};
constexpr Color kGrey{190, 190, 190};
constexpr Color kBlue{31, 119, 180};
constexpr Color kOrange{255, 127, 14};

struct Glyph {
  char ch;
  const char* rows[7];
};

// clang-format off
constexpr Glyph kFont[] = {
  {'0', {"01110", "10001", "10011", "10101", "11001", "10001", "01110"}},
  {'1', {"00100", "01100", "00100", "00100", "00100", "00100", "01110"}},
  {'2', {"01110", "10001", "00001", "00010", "00100", "01000", "11111"}},
  {'3', {"11111", "00010", "00100", "00010", "00001", "10001", "01110"}},
  {'4', {"00010", "00110", "01010", "10010", "11111", "00010", "00010"}},
  {'5', {"11111", "10000", "11110", "00001", "00001", "10001", "01110"}},
  {'6', {"00110", "01000", "10000", "11110", "10001", "10001", "01110"}},
  {'7', {"11111", "00001", "00010", "00100", "01000", "01000", "01000"}},
  {'8', {"01110", "10001", "10001", "01110", "10001", "10001", "01110"}},
  {'9', {"01110", "10001", "10001", "01111", "00001", "00010", "01100"}},
  {'A', {"01110", "10001", "10001", "11111", "10001", "10001", "10001"}},
  {'B', {"11110", "10001", "10001", "11110", "10001", "10001", "11110"}},
  {'C', {"01110", "10001", "10000", "10000", "10000", "10001", "01110"}},
  {'D', {"11100", "10010", "10001", "10001", "10001", "10010", "11100"}},
  {'E', {"11111", "10000", "10000", "11110", "10000", "10000", "11111"}},
  {'F', {"11111", "10000", "10000", "11110", "10000", "10000", "10000"}},
  {'G', {"01110", "10001", "10000", "10111", "10001", "10001", "01111"}},
  {'H', {"10001", "10001", "10001", "11111", "10001", "10001", "10001"}},
  {'I', {"01110", "00100", "00100", "00100", "00100", "00100", "01110"}},
  {'J', {"00111", "00010", "00010", "00010", "00010", "10010", "01100"}},
  {'K', {"10001", "10010", "10100", "11000", "10100", "10010", "10001"}},
  {'L', {"10000", "10000", "10000", "10000", "10000", "10000", "11111"}},
  {'M', {"10001", "11011", "10101", "10101", "10001", "10001", "10001"}},
  {'N', {"10001", "10001", "11001", "10101", "10011", "10001", "10001"}},
  {'O', {"01110", "10001", "10001", "10001", "10001", "10001", "01110"}},
  {'P', {"11110", "10001", "10001", "11110", "10000", "10000", "10000"}},
  {'Q', {"01110", "10001", "10001", "10001", "10101", "10010", "01101"}},
  {'R', {"11110", "10001", "10001", "11110", "10100", "10010", "10001"}},
  {'S', {"01111", "10000", "10000", "01110", "00001", "00001", "11110"}},
  {'T', {"11111", "00100", "00100", "00100", "00100", "00100", "00100"}},
  {'U', {"10001", "10001", "10001", "10001", "10001", "10001", "01110"}},
  {'V', {"10001", "10001", "10001", "10001", "10001", "01010", "00100"}},
  {'W', {"10001", "10001", "10001", "10101", "10101", "10101", "01010"}},
  {'X', {"10001", "10001", "01010", "00100", "01010", "10001", "10001"}},
  {'Y', {"10001", "10001", "10001", "01010", "00100", "00100", "00100"}},
  {'Z', {"11111", "00001", "00010", "00100", "01000", "10000", "11111"}},
  {'.', {"00000", "00000", "00000", "00000", "00000", "01100", "01100"}},
  {'-', {"00000", "00000", "00000", "11111", "00000", "00000", "00000"}},
  {'_', {"00000", "00000", "00000", "00000", "00000", "00000", "11111"}},
  {':', {"00000", "01100", "01100", "00000", "01100", "01100", "00000"}},
  {'%', {"11000", "11001", "00010", "00100", "01000", "10011", "00011"}},
};
// clang-format on

const Glyph* find_glyph(char c) {
  if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  for (const auto& g : kFont) {
    if (g.ch == c) return &g;
  }
  return nullptr;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string metric_csv(const metrics::MetricReport& r) {
  std::string out = "class,dsc,iou\n";
  char buf[96];
  for (std::size_t c = 0; c < r.dsc.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.9g\n", c, r.dsc[c], r.iou[c]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mean,%.9g,%.9g\n", r.mean_dsc, r.mean_iou);
  return out + buf;
}

nlohmann::json metric_json(const metrics::MetricReport& r) {
  return {{"dsc", r.dsc},
          {"iou", r.iou},
          {"mean_dsc", r.mean_dsc},
          {"mean_iou", r.mean_iou},
          {"samples", r.sample_count}};
}

Canvas::Canvas(int width, int height, std::uint8_t fill) {
  img_.width = width;
  img_.height = height;
  img_.rgb.assign(static_cast<std::size_t>(width) * height * 3, fill);
}

void Canvas::set(int x, int y, const Color& c) {
  if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
  const std::size_t i = (static_cast<std::size_t>(y) * img_.width + x) * 3;
  img_.rgb[i] = c[0];
  img_.rgb[i + 1] = c[1];
  img_.rgb[i + 2] = c[2];
}

void Canvas::line(int x0, int y0, int x1, int y1, const Color& c) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

void Canvas::fill_rect(int x0, int y0, int x1, int y1, const Color& c) {
  for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) {
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }
}

void Canvas::text(int x, int y, const std::string& s, const Color& c, int scale) {
  for (char ch : s) {
    if (const Glyph* g = find_glyph(ch)) {
      for (int r = 0; r < 7; ++r) {
        for (int col = 0; col < 5; ++col) {
          if (g->rows[r][col] == '1') {
            fill_rect(x + col * scale, y + r * scale, x + (col + 1) * scale - 1,
                      y + (r + 1) * scale - 1, c);
          }
        }
      }
    }
    x += 6 * scale;
  }
}

void Canvas::blit(int x, int y, const io::RgbImage& image) {
  for (int r = 0; r < image.height; ++r) {
    for (int col = 0; col < image.width; ++col) {
      const std::size_t i = (static_cast<std::size_t>(r) * image.width + col) * 3;
      set(x + col, y + r, {image.rgb[i], image.rgb[i + 1], image.rgb[i + 2]});
    }
  }
}

io::RgbImage loss_curve(const std::vector<EpochRecord>& history) {
  constexpr int W = 640, H = 400, left = 60, right = 60, top = 30, bottom = 50;
  Canvas cv(W, H);
  const int pw = W - left - right, ph = H - top - bottom;
  cv.line(left, top + ph, left + pw, top + ph, kBlack);
  cv.line(left, top, left, top + ph, kBlack);
  cv.line(left + pw, top, left + pw, top + ph, kBlack);
  cv.text(left, 8, "TRAIN LOSS", kBlue);
  cv.text(left + pw - 6 * 12, 8, "VAL MEAN IOU", kOrange);
  cv.text(left + pw / 2 - 15, H - 18, "EPOCH", kBlack);
  if (history.empty()) return cv.image();

  double max_loss = 0.0;
  for (const auto& r : history) {
    if (std::isfinite(r.train_loss)) max_loss = std::max(max_loss, r.train_loss);
  }
  if (max_loss <= 0.0) max_loss = 1.0;
  const int n = static_cast<int>(history.size());
  auto px = [&](int i) { return left + (n == 1 ? pw / 2 : i * pw / (n - 1)); };
  auto py = [&](double v, double vmax) {
    return top + ph - static_cast<int>(std::lround(std::clamp(v / vmax, 0.0, 1.0) * ph));
  };
  for (int t = 0; t <= 4; ++t) {
    const int y = top + ph - t * ph / 4;
    cv.line(left - 4, y, left, y, kBlack);
    cv.line(left + pw, y, left + pw + 4, y, kBlack);
    cv.text(4, y - 3, format_number(max_loss * t / 4), kBlue);
    cv.text(left + pw + 8, y - 3, format_number(t / 4.0), kOrange);
    if (t > 0) {
      for (int x = left + 1; x < left + pw; x += 4) cv.set(x, y, kGrey);
    }
  }
  cv.text(left - 3, top + ph + 8, std::to_string(history.front().epoch), kBlack);
  const std::string last = std::to_string(history.back().epoch);
  cv.text(left + pw - 6 * static_cast<int>(last.size()) + 3, top + ph + 8, last, kBlack);
  for (int i = 0; i < n; ++i) {
    const int x = px(i);
    const int yl = py(history[i].train_loss, max_loss);
    const int yi = py(history[i].val_mean_iou, 1.0);
    if (i > 0) {
      cv.line(px(i - 1), py(history[i - 1].train_loss, max_loss), x, yl, kBlue);
      cv.line(px(i - 1), py(history[i - 1].val_mean_iou, 1.0), x, yi, kOrange);
    }
    cv.fill_rect(x - 1, yl - 1, x + 1, yl + 1, kBlue);
    cv.fill_rect(x - 1, yi - 1, x + 1, yi + 1, kOrange);
  }
  return cv.image();
}

io::RgbImage iou_bars(const metrics::MetricReport& r) {
  const int k = static_cast<int>(r.iou.size());
  constexpr int H = 360, left = 50, top = 30, bottom = 40, bar = 48, gap = 24;
  const int W = left + (k + 1) * (bar + gap) + gap;
  Canvas cv(W, H);
  const int ph = H - top - bottom;
  cv.text(left, 8, "IOU PER CLASS", kBlack);
  cv.line(left, top + ph, W - 10, top + ph, kBlack);
  cv.line(left, top, left, top + ph, kBlack);
  for (int t = 0; t <= 4; ++t) {
    const int y = top + ph - t * ph / 4;
    cv.line(left - 4, y, left, y, kBlack);
    cv.text(8, y - 3, format_number(t / 4.0), kBlack);
  }
  for (int c = 0; c <= k; ++c) {
    const double v = c < k ? r.iou[c] : r.mean_iou;
    const int x0 = left + gap + c * (bar + gap);
    const int h = static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * ph));
    cv.fill_rect(x0, top + ph - h, x0 + bar - 1, top + ph - 1, c < k ? kBlue : kOrange);
    cv.text(x0, top + ph - h - 10, format_number(v), kBlack);
    cv.text(x0 + 4, top + ph + 8, c < k ? "C" + std::to_string(c) : "MEAN", kBlack);
  }
  return cv.image();
}

std::array<std::uint8_t, 3> class_color(int label) {
  static constexpr Color kPalette[] = {{0, 0, 0},       {230, 25, 75},  {60, 180, 75},
                                       {255, 225, 25},  {0, 130, 200},  {245, 130, 48},
                                       {145, 30, 180},  {70, 240, 240}, {240, 50, 230}};
  constexpr int n = static_cast<int>(std::size(kPalette));
  if (label < n) return kPalette[label];
  // Deterministic spread for larger label sets.
  const auto h = static_cast<std::uint32_t>(label) * 2654435761u;
  return {static_cast<std::uint8_t>(h >> 24), static_cast<std::uint8_t>(h >> 16),
          static_cast<std::uint8_t>(h >> 8)};
}

io::RgbImage colorize(const LabelMap& labels) {
  io::RgbImage img{labels.width, labels.height, {}};
  img.rgb.reserve(labels.labels.size() * 3);
  for (std::uint8_t v : labels.labels) {
    const auto c = class_color(v);
    img.rgb.insert(img.rgb.end(), c.begin(), c.end());
  }
  return img;
}

io::RgbImage to_rgb(const ImageTensor& image) {
  io::RgbImage img{image.width, image.height, {}};
  img.rgb.reserve(image.pixels.size());
  for (float v : image.pixels) {
    img.rgb.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  }
  return img;
}

io::RgbImage qualitative_panel(const ImageTensor& image, const LabelMap& truth,
                               const LabelMap& prediction) {
  if (truth.width != image.width || truth.height != image.height ||
      prediction.width != image.width || prediction.height != image.height) {
    throw InvalidArgument("qualitative panel: image, truth and prediction sizes differ");
  }
  constexpr int gutter = 4, header = 14;
  const int w = image.width, h = image.height;
  Canvas cv(3 * w + 4 * gutter, h + header + 2 * gutter);
  const char* titles[] = {"INPUT", "GT", "PRED"};
  const io::RgbImage tiles[] = {to_rgb(image), colorize(truth), colorize(prediction)};
  for (int i = 0; i < 3; ++i) {
    const int x = gutter + i * (w + gutter);
    cv.text(x, 3, titles[i], kBlack);
    cv.blit(x, header + gutter, tiles[i]);
  }
  return cv.image();
}

void export_prediction(const SegmentationOutput& out, const std::filesystem::path& stem) {
  io::NpyArray arr;
  arr.shape = {out.num_classes, static_cast<std::size_t>(out.height),
               static_cast<std::size_t>(out.width)};
  arr.data = out.mask_logits;
  auto npy = stem;
  npy += ".npy";
  io::write_npy(npy, arr);
  auto meta = stem;
  meta += ".json";
  nlohmann::json j{{"num_classes", out.num_classes},
                   {"height", out.height},
                   {"width", out.width},
                   {"ious", out.ious},
                   {"logits", npy.filename().string()}};
  std::ofstream(meta) << j.dump(2) << "\n";
}

}  // namespace kanprompt::report
