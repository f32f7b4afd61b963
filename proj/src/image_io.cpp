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

#include "kanprompt/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <regex>
#include <sstream>
#include <string>

#include "kanprompt/errors.hpp"

namespace kanprompt::io {
namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

bool is_jpeg(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".jpg" || ext == ".jpeg";
}

struct PngImage {
  png_image image;
  PngImage() {
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
  }
  ~PngImage() { png_image_free(&image); }
};

void begin_png(PngImage& png, const std::filesystem::path& path) {
  if (png_image_begin_read_from_file(&png.image, path.string().c_str()) == 0) {
    throw DatasetError("cannot read PNG " + path.string() + ": " + png.image.message);
  }
}

std::vector<std::uint8_t> finish_png(PngImage& png, const std::filesystem::path& path,
                                     png_uint_32 format) {
  png.image.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(png.image));
  if (png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr) == 0) {
    throw DatasetError("cannot decode PNG " + path.string() + ": " + png.image.message);
  }
  return buffer;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr info) {
  auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
  (*info->err->format_message)(info, err->message);
  std::longjmp(err->jump, 1);
}

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.string().c_str(), mode), &std::fclose);
  if (!f) throw DatasetError("cannot open " + path.string());
  return f;
}

RgbImage read_jpeg(const std::filesystem::path& path, bool header_only) {
  FilePtr file = open_file(path, "rb");
  jpeg_decompress_struct info;
  JpegErrorManager err;
  info.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  RgbImage out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&info);
    throw DatasetError("cannot decode JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&info);
  jpeg_stdio_src(&info, file.get());
  jpeg_read_header(&info, TRUE);
  out.width = static_cast<int>(info.image_width);
  out.height = static_cast<int>(info.image_height);
  if (!header_only) {
    info.out_color_space = JCS_RGB;
    jpeg_start_decompress(&info);
    out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
    while (info.output_scanline < info.output_height) {
      JSAMPROW row = out.rgb.data() + static_cast<std::size_t>(info.output_scanline) * out.width * 3;
      jpeg_read_scanlines(&info, &row, 1);
    }
    jpeg_finish_decompress(&info);
  }
  jpeg_destroy_decompress(&info);
  return out;
}

}  // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
  if (is_jpeg(path)) return read_jpeg(path, false);
  PngImage png;
  begin_png(png, path);
  RgbImage out;
  out.width = static_cast<int>(png.image.width);
  out.height = static_cast<int>(png.image.height);
  out.rgb = finish_png(png, path, PNG_FORMAT_RGB);
  return out;
}

std::pair<int, int> image_size(const std::filesystem::path& path) {
  if (is_jpeg(path)) {
    const RgbImage header = read_jpeg(path, true);
    return {header.width, header.height};
  }
  PngImage png;
  begin_png(png, path);
  return {static_cast<int>(png.image.width), static_cast<int>(png.image.height)};
}

ImageTensor to_tensor(const RgbImage& image) {
  ImageTensor t;
  t.height = image.height;
  t.width = image.width;
  t.pixels.resize(image.rgb.size());
  for (std::size_t i = 0; i < image.rgb.size(); ++i) t.pixels[i] = image.rgb[i] / 255.0f;
  return t;
}

ImageTensor read_image(const std::filesystem::path& path) {
  ImageTensor t = to_tensor(read_rgb(path));
  t.source = path.string();
  return t;
}

LabelMap read_label_png(const std::filesystem::path& path) {
  PngImage png;
  begin_png(png, path);
  LabelMap out;
  out.width = static_cast<int>(png.image.width);
  out.height = static_cast<int>(png.image.height);
  if ((png.image.format & PNG_FORMAT_FLAG_COLOR) == 0) {
    out.labels = finish_png(png, path, PNG_FORMAT_GRAY);
    return out;
  }
  const auto rgb = finish_png(png, path, PNG_FORMAT_RGB);
  out.labels.resize(rgb.size() / 3);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (rgb[3 * i] != rgb[3 * i + 1] || rgb[3 * i] != rgb[3 * i + 2]) {
      throw DatasetError("mask " + path.string() +
                         " is a colour image; masks must hold class indices in one channel");
    }
    out.labels[i] = rgb[3 * i];
  }
  return out;
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height, png_uint_32 format,
               const std::uint8_t* data) {
  // The simplified writer emits identical bytes for identical pixels, which
  // the reproducibility checks on generated datasets rely on.
  FilePtr file = open_file(path, "wb");
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  if (png_image_write_to_stdio(&png.image, file.get(), 0, data, 0, nullptr) == 0) {
    throw DatasetError("cannot write PNG " + path.string() + ": " + png.image.message);
  }
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image) {
  if (image.rgb.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw StructuralError("write_png_rgb: buffer does not match image size");
  }
  write_png(path, image.width, image.height, PNG_FORMAT_RGB, image.rgb.data());
}

void write_png_gray(const std::filesystem::path& path, int width, int height,
                    std::span<const std::uint8_t> values) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    throw StructuralError("write_png_gray: buffer does not match image size");
  }
  write_png(path, width, height, PNG_FORMAT_GRAY, values.data());
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  write_png_gray(path, labels.width, labels.height, labels.labels);
}

NpyArray read_npy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) {
    throw DatasetError(path.string() + " is not a .npy file");
  }
  std::size_t header_len = 0;
  if (magic[6] == 1) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    header_len = b[0] | (b[1] << 8);
  } else {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::size_t>(b[3]) << 24);
  }
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw DatasetError(path.string() + ": truncated .npy header");
  if (header.find("'<f4'") == std::string::npos) {
    throw DatasetError(path.string() + ": only little-endian float32 ('<f4') arrays are supported");
  }
  if (header.find("'fortran_order': True") != std::string::npos) {
    throw DatasetError(path.string() + ": Fortran-ordered arrays are not supported");
  }
  NpyArray arr;
  std::smatch m;
  static const std::regex shape_re(R"('shape':\s*\(([^)]*)\))");
  if (!std::regex_search(header, m, shape_re)) {
    throw DatasetError(path.string() + ": .npy header has no shape");
  }
  std::stringstream dims(m[1].str());
  std::string item;
  std::size_t count = 1;
  while (std::getline(dims, item, ',')) {
    if (item.find_first_not_of(" ") == std::string::npos) continue;
    arr.shape.push_back(static_cast<std::size_t>(std::stoull(item)));
    count *= arr.shape.back();
  }
  arr.data.resize(count);
  for (float& v : arr.data) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    const std::uint32_t bits = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    std::memcpy(&v, &bits, 4);
  }
  if (!in) throw DatasetError(path.string() + ": truncated .npy data");
  return arr;
}

void write_npy(const std::filesystem::path& path, const NpyArray& array) {
  std::size_t count = 1;
  std::ostringstream shape;
  shape << "(";
  for (std::size_t i = 0; i < array.shape.size(); ++i) {
    shape << array.shape[i] << (array.shape.size() == 1 || i + 1 < array.shape.size() ? "," : "");
    if (i + 1 < array.shape.size()) shape << " ";
    count *= array.shape[i];
  }
  shape << ")";
  if (count != array.data.size()) throw StructuralError("write_npy: shape does not match data");
  std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': " + shape.str() + ", }";
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out.write("\x93NUMPY\x01\x00", 8);
  const unsigned char len[2] = {static_cast<unsigned char>(header.size() & 0xff),
                                static_cast<unsigned char>(header.size() >> 8)};
  out.write(reinterpret_cast<const char*>(len), 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (float v : array.data) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    const unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                                static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
  }
}

}  // namespace kanprompt::io
