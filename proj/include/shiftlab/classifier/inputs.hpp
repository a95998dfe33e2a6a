// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "shiftlab/common/image.hpp"
#include "shiftlab/scene/dataset.hpp"

namespace shiftlab::classifier {

/// Produces the 8-bit image for a manifest row.
class ImageSource {
 public:
  virtual ~ImageSource() = default;
  virtual Image8 load(const scene::ManifestRow& row) const = 0;
};

/// Reads PNGs written by generate_dataset. Rows whose image was not written
/// (shadow rows with write_shadow_images off) are rendered instead.
class DiskImageSource : public ImageSource {
 public:
  DiskImageSource(std::filesystem::path root, int image_size) : root_(std::move(root)), image_size_(image_size) {}
  Image8 load(const scene::ManifestRow& row) const override;

 private:
  std::filesystem::path root_;
  int image_size_;
};

/// Renders rows on demand with scene::render_row; the bytes match the PNGs
/// written by generate_dataset.
class RenderImageSource : public ImageSource {
 public:
  explicit RenderImageSource(int image_size) : image_size_(image_size) {}
  Image8 load(const scene::ManifestRow& row) const override;

 private:
  int image_size_;
};

/// Writes the network input for manifest row `index` into `out`.
using InputFn = std::function<void(size_t index, std::span<uint8_t> out)>;

InputFn inputs_from_source(const ImageSource& source, const scene::DatasetManifest& manifest, int input_size);

/// Network inputs for a subset of rows, computed once.
class InputCache {
 public:
  InputCache(const InputFn& fn, const std::vector<size_t>& indices, size_t manifest_size, int input_size,
             unsigned workers);

  bool contains(size_t index) const { return slot_[index] >= 0; }
  std::span<const uint8_t> get(size_t index) const;
  InputFn as_fn() const;
  size_t bytes_per_input() const { return bytes_; }

 private:
  size_t bytes_;
  std::vector<int64_t> slot_;
  std::vector<uint8_t> data_;
};

}  // namespace shiftlab::classifier
