// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace shiftlab {

/// Interleaved RGB image, row-major, channel values in [0, 1].
struct ImageF {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  ImageF() = default;
  ImageF(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0.0F) {}

  float& at(int x, int y, int c) { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const { return data[(static_cast<size_t>(y) * width + x) * 3 + c]; }

  bool operator==(const ImageF&) const = default;
};

/// 8-bit interleaved RGB, the on-disk representation.
struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;

  Image8() = default;
  Image8(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

  bool operator==(const Image8&) const = default;
};

Image8 quantize(const ImageF& image);

/// Area-average resample to a square `size`; exact box filter when the
/// source dimension is an integer multiple of `size`.
std::vector<uint8_t> resample_rgb(const Image8& image, int size);

void write_png(const std::filesystem::path& path, const Image8& image);
Image8 read_png(const std::filesystem::path& path);

}  // namespace shiftlab
