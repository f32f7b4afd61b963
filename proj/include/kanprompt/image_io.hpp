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

// Reading and writing images, label maps and .npy arrays.

#ifndef KANPROMPT_IMAGE_IO_HPP_
#define KANPROMPT_IMAGE_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kanprompt/tensor.hpp"

namespace kanprompt::io {

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;
};

// PNG or JPEG by extension (.png, .jpg, .jpeg), any colour type, as RGB.
RgbImage read_rgb(const std::filesystem::path& path);
// Header-only probe of a PNG or JPEG; returns {width, height}.
std::pair<int, int> image_size(const std::filesystem::path& path);
ImageTensor to_tensor(const RgbImage& image);
ImageTensor read_image(const std::filesystem::path& path);

// Single-channel PNG whose pixel values are class indices. Colour PNGs are
// accepted only when every pixel is grey (r == g == b).
LabelMap read_label_png(const std::filesystem::path& path);

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);
void write_png_gray(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> values);
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);

// Little-endian float32 array in NumPy .npy (v1.0) layout, C order.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<float> data;
};

NpyArray read_npy(const std::filesystem::path& path);
void write_npy(const std::filesystem::path& path, const NpyArray& array);

}  // namespace kanprompt::io

#endif  // KANPROMPT_IMAGE_IO_HPP_
