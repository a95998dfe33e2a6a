// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/common/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace shiftlab {

Image8 quantize(const ImageF& image) {
  Image8 out(image.width, image.height);
  for (size_t i = 0; i < image.data.size(); ++i) {
    const float v = std::clamp(image.data[i], 0.0F, 1.0F);
    out.data[i] = static_cast<uint8_t>(std::lround(v * 255.0F));
  }
  return out;
}

std::vector<uint8_t> resample_rgb(const Image8& image, int size) {
  if (size <= 0) throw std::invalid_argument("resample_rgb: size must be positive");
  std::vector<uint8_t> out(static_cast<size_t>(size) * size * 3);
  const double sx = static_cast<double>(image.width) / size;
  const double sy = static_cast<double>(image.height) / size;
  for (int oy = 0; oy < size; ++oy) {
    const double y0 = oy * sy;
    const double y1 = y0 + sy;
    for (int ox = 0; ox < size; ++ox) {
      const double x0 = ox * sx;
      const double x1 = x0 + sx;
      double acc[3] = {0, 0, 0};
      double wsum = 0;
      for (int y = static_cast<int>(y0); y < std::min<double>(std::ceil(y1), image.height); ++y) {
        const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        if (wy <= 0) continue;
        for (int x = static_cast<int>(x0); x < std::min<double>(std::ceil(x1), image.width); ++x) {
          const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          if (wx <= 0) continue;
          const double w = wx * wy;
          const uint8_t* px = &image.data[(static_cast<size_t>(y) * image.width + x) * 3];
          for (int c = 0; c < 3; ++c) acc[c] += w * px[c];
          wsum += w;
        }
      }
      uint8_t* dst = &out[(static_cast<size_t>(oy) * size + ox) * 3];
      for (int c = 0; c < 3; ++c) {
        dst[c] = static_cast<uint8_t>(std::clamp(std::lround(acc[c] / wsum), 0L, 255L));
      }
    }
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

void write_png(const std::filesystem::path& path, const Image8& image) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: allocation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng: failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&image.data[static_cast<size_t>(y) * image.width * 3]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image8 read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: allocation failed");
  }
  Image8 out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("libpng: failed reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  out = Image8(w, h);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, &out.data[static_cast<size_t>(y) * w * 3], nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace shiftlab
