// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/classifier/inputs.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "shiftlab/common/parallel.hpp"

namespace shiftlab::classifier {

Image8 DiskImageSource::load(const scene::ManifestRow& row) const {
  const auto path = root_ / row.relative_path;
  if (row.shadow && !std::filesystem::exists(path)) {
    return scene::render_row(row, image_size_);
  }
  return read_png(path);
}

Image8 RenderImageSource::load(const scene::ManifestRow& row) const { return scene::render_row(row, image_size_); }

InputFn inputs_from_source(const ImageSource& source, const scene::DatasetManifest& manifest, int input_size) {
  return [&source, &manifest, input_size](size_t index, std::span<uint8_t> out) {
    const std::vector<uint8_t> pixels = resample_rgb(source.load(manifest.rows.at(index)), input_size);
    if (pixels.size() != out.size()) throw std::runtime_error("input buffer size mismatch");
    std::copy(pixels.begin(), pixels.end(), out.begin());
  };
}

InputCache::InputCache(const InputFn& fn, const std::vector<size_t>& indices, size_t manifest_size, int input_size,
                       unsigned workers)
    : bytes_(static_cast<size_t>(input_size) * input_size * 3), slot_(manifest_size, -1) {
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= manifest_size) throw std::out_of_range("input index out of range");
    slot_[indices[i]] = static_cast<int64_t>(i);
  }
  data_.resize(indices.size() * bytes_);
  parallel_for(indices.size(), workers, [&](size_t i) {
    if (slot_[indices[i]] != static_cast<int64_t>(i)) return;  // duplicate index
    fn(indices[i], std::span<uint8_t>(data_.data() + i * bytes_, bytes_));
  });
}

std::span<const uint8_t> InputCache::get(size_t index) const {
  if (!contains(index)) throw std::out_of_range("row " + std::to_string(index) + " not cached");
  return {data_.data() + static_cast<size_t>(slot_[index]) * bytes_, bytes_};
}

InputFn InputCache::as_fn() const {
  return [this](size_t index, std::span<uint8_t> out) {
    const auto in = get(index);
    std::copy(in.begin(), in.end(), out.begin());
  };
}

}  // namespace shiftlab::classifier
