// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace shiftlab::classifier {

inline constexpr int kNumClasses = 5;

struct NetworkShape {
  int input_size = 32;  // square RGB input; must be divisible by 8
  std::array<int, 3> channels{8, 16, 32};
  int head_grid = 2;  // final feature map is averaged over head_grid x head_grid cells
  int num_classes = kNumClasses;

  void validate() const;
  bool operator==(const NetworkShape&) const = default;
};

/// Three conv3x3(pad 1) -> ReLU -> maxpool2 blocks, then the final map is
/// average-pooled to a head_grid x head_grid grid feeding a linear head.
///
/// Activations are stored channel-major per pixel, i.e. an Eigen column per
/// pixel, so the flattened feature vector of one sample is contiguous.
/// All weights and biases live in one flat vector whose layout is fixed by
/// the shape; gradients use the same layout.
class Network {
 public:
  struct BatchStats {
    double loss_sum = 0;  // summed cross-entropy over the chunk
    int correct = 0;
  };

  explicit Network(NetworkShape shape);

  const NetworkShape& shape() const { return shape_; }
  size_t parameter_count() const { return params_.size(); }
  std::span<float> parameters() { return params_; }
  std::span<const float> parameters() const { return params_; }

  /// He-uniform weights, zero biases.
  void initialize(uint64_t seed);

  /// inputs: n images of input_size^2 * 3 bytes (HWC). logits: n * num_classes.
  void forward(std::span<const uint8_t> inputs, size_t n, std::span<float> logits) const;

  /// Adds d(sum of per-sample loss / normalizer)/d(params) into `grad`.
  BatchStats accumulate_gradient(std::span<const uint8_t> inputs, std::span<const int> labels, size_t n,
                                 double normalizer, std::span<float> grad) const;

 private:
  struct ConvOffsets {
    size_t weight;  // Cout x (9 * Cin), column-major
    size_t bias;
    int in_channels;
    int out_channels;
    int size;  // input spatial size of this block
  };

  NetworkShape shape_;
  std::array<ConvOffsets, 3> conv_{};
  size_t fc_weight_ = 0;  // classes x features, column-major
  size_t fc_bias_ = 0;
  int features_ = 0;
  int final_size_ = 0;
  std::vector<float> params_;
};

}  // namespace shiftlab::classifier
