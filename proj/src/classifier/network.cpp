// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/classifier/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "shiftlab/common/error.hpp"
#include "shiftlab/common/rng.hpp"

namespace shiftlab::classifier {

namespace {

using Matrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using VectorMap = Eigen::Map<Eigen::VectorXf>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXf>;

/// (9C) x (n*H*W) patch matrix for a 3x3 window with zero padding.
void im2col(const Matrix& x, int channels, int size, size_t n, Matrix& col) {
  const size_t hw = static_cast<size_t>(size) * size;
  col.resize(9 * channels, static_cast<Eigen::Index>(n * hw));
  for (size_t s = 0; s < n; ++s) {
    for (int y = 0; y < size; ++y) {
      for (int xx = 0; xx < size; ++xx) {
        const size_t j = s * hw + static_cast<size_t>(y) * size + xx;
        float* dst = col.data() + j * 9 * channels;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          for (int kx = 0; kx < 3; ++kx, dst += channels) {
            const int sx = xx + kx - 1;
            if (sy < 0 || sy >= size || sx < 0 || sx >= size) {
              std::memset(dst, 0, sizeof(float) * channels);
            } else {
              const size_t src = s * hw + static_cast<size_t>(sy) * size + sx;
              std::memcpy(dst, x.data() + src * channels, sizeof(float) * channels);
            }
          }
        }
      }
    }
  }
}

void col2im(const Matrix& col, int channels, int size, size_t n, Matrix& dx) {
  const size_t hw = static_cast<size_t>(size) * size;
  dx.setZero(channels, static_cast<Eigen::Index>(n * hw));
  for (size_t s = 0; s < n; ++s) {
    for (int y = 0; y < size; ++y) {
      for (int xx = 0; xx < size; ++xx) {
        const size_t j = s * hw + static_cast<size_t>(y) * size + xx;
        const float* src = col.data() + j * 9 * channels;
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = y + ky - 1;
          for (int kx = 0; kx < 3; ++kx, src += channels) {
            const int sx = xx + kx - 1;
            if (sy < 0 || sy >= size || sx < 0 || sx >= size) continue;
            float* dst = dx.data() + (s * hw + static_cast<size_t>(sy) * size + sx) * channels;
            for (int c = 0; c < channels; ++c) dst[c] += src[c];
          }
        }
      }
    }
  }
}

/// 2x2/2 max pool; `argmax` records the winning source column per output.
void maxpool(const Matrix& a, int channels, int size, size_t n, Matrix& out, std::vector<int32_t>& argmax) {
  const int half = size / 2;
  const size_t hw = static_cast<size_t>(size) * size;
  const size_t ohw = static_cast<size_t>(half) * half;
  out.resize(channels, static_cast<Eigen::Index>(n * ohw));
  argmax.resize(static_cast<size_t>(channels) * n * ohw);
  for (size_t s = 0; s < n; ++s) {
    for (int y = 0; y < half; ++y) {
      for (int x = 0; x < half; ++x) {
        const size_t o = s * ohw + static_cast<size_t>(y) * half + x;
        const size_t base = s * hw + static_cast<size_t>(2 * y) * size + 2 * x;
        const size_t cand[4] = {base, base + 1, base + size, base + size + 1};
        for (int c = 0; c < channels; ++c) {
          size_t best = cand[0];
          float v = a(c, static_cast<Eigen::Index>(best));
          for (int k = 1; k < 4; ++k) {
            const float w = a(c, static_cast<Eigen::Index>(cand[k]));
            if (w > v) {
              v = w;
              best = cand[k];
            }
          }
          out(c, static_cast<Eigen::Index>(o)) = v;
          argmax[o * channels + c] = static_cast<int32_t>(best);
        }
      }
    }
  }
}

void unpool(const Matrix& dout, const std::vector<int32_t>& argmax, int channels, size_t in_cols, Matrix& da) {
  da.setZero(channels, static_cast<Eigen::Index>(in_cols));
  const auto cols = static_cast<size_t>(dout.cols());
  for (size_t o = 0; o < cols; ++o) {
    for (int c = 0; c < channels; ++c) {
      da(c, argmax[o * channels + c]) += dout(c, static_cast<Eigen::Index>(o));
    }
  }
}

Matrix load_inputs(std::span<const uint8_t> inputs, size_t n, int size) {
  const size_t hw = static_cast<size_t>(size) * size;
  Matrix x(3, static_cast<Eigen::Index>(n * hw));
  const size_t total = n * hw * 3;
  float* dst = x.data();
  for (size_t i = 0; i < total; ++i) dst[i] = static_cast<float>(inputs[i]) * (1.0F / 255.0F) - 0.5F;
  return x;
}

// Averages each sample's size x size map over a grid x grid partition.
Matrix grid_mean(const Matrix& x, int size, int grid, size_t n) {
  const int c = static_cast<int>(x.rows());
  const int cell = size / grid;
  Matrix out = Matrix::Zero(c * grid * grid, static_cast<Eigen::Index>(n));
  const float inv = 1.0F / static_cast<float>(cell * cell);
  for (size_t s = 0; s < n; ++s)
    for (int y = 0; y < size; ++y)
      for (int xx = 0; xx < size; ++xx) {
        const int g = (y / cell) * grid + xx / cell;
        out.col(static_cast<Eigen::Index>(s)).segment(g * c, c) +=
            x.col(static_cast<Eigen::Index>(s * size * size + y * size + xx)) * inv;
      }
  return out;
}

Matrix grid_mean_backward(const Matrix& d, int c, int size, int grid, size_t n) {
  const int cell = size / grid;
  Matrix out(c, static_cast<Eigen::Index>(n) * size * size);
  const float inv = 1.0F / static_cast<float>(cell * cell);
  for (size_t s = 0; s < n; ++s)
    for (int y = 0; y < size; ++y)
      for (int xx = 0; xx < size; ++xx) {
        const int g = (y / cell) * grid + xx / cell;
        out.col(static_cast<Eigen::Index>(s * size * size + y * size + xx)) =
            d.col(static_cast<Eigen::Index>(s)).segment(g * c, c) * inv;
      }
  return out;
}

struct BlockCache {
  Matrix col;
  Matrix pre;  // pre-activation
  Matrix pooled;
  std::vector<int32_t> argmax;
};

}  // namespace

void NetworkShape::validate() const {
  if (input_size < 8 || input_size % 8 != 0) {
    throw ValidationError("input_size", "must be a positive multiple of 8, got " + std::to_string(input_size));
  }
  for (int c : channels) {
    if (c <= 0) throw ValidationError("channels", "must be positive");
  }
  if (num_classes < 2) throw ValidationError("num_classes", "need at least two classes");
  if (head_grid < 1 || (input_size / 8) % head_grid != 0) {
    throw ValidationError("head_grid", "must divide the final feature map size " + std::to_string(input_size / 8));
  }
}

Network::Network(NetworkShape shape) : shape_(shape) {
  shape_.validate();
  size_t offset = 0;
  int in = 3;
  int size = shape_.input_size;
  for (int l = 0; l < 3; ++l) {
    const int out = shape_.channels[static_cast<size_t>(l)];
    conv_[static_cast<size_t>(l)] = {offset, offset + static_cast<size_t>(out) * 9 * in, in, out, size};
    offset += static_cast<size_t>(out) * 9 * in + out;
    in = out;
    size /= 2;
  }
  final_size_ = size;
  features_ = in * shape_.head_grid * shape_.head_grid;
  fc_weight_ = offset;
  fc_bias_ = offset + static_cast<size_t>(shape_.num_classes) * features_;
  params_.assign(fc_bias_ + shape_.num_classes, 0.0F);
}

void Network::initialize(uint64_t seed) {
  Rng rng(seed);
  std::fill(params_.begin(), params_.end(), 0.0F);
  for (const auto& c : conv_) {
    const size_t count = static_cast<size_t>(c.out_channels) * 9 * c.in_channels;
    const double limit = std::sqrt(6.0 / (9.0 * c.in_channels));
    for (size_t i = 0; i < count; ++i) params_[c.weight + i] = static_cast<float>(rng.uniform(-limit, limit));
  }
  const size_t count = static_cast<size_t>(shape_.num_classes) * features_;
  const double limit = std::sqrt(6.0 / (features_ + shape_.num_classes));
  for (size_t i = 0; i < count; ++i) params_[fc_weight_ + i] = static_cast<float>(rng.uniform(-limit, limit));
}

void Network::forward(std::span<const uint8_t> inputs, size_t n, std::span<float> logits) const {
  Matrix x = load_inputs(inputs, n, shape_.input_size);
  Matrix col;
  Matrix pooled;
  std::vector<int32_t> argmax;
  for (const auto& c : conv_) {
    im2col(x, c.in_channels, c.size, n, col);
    ConstMatrixMap w(params_.data() + c.weight, c.out_channels, 9 * c.in_channels);
    ConstVectorMap b(params_.data() + c.bias, c.out_channels);
    Matrix z = w * col;
    z.colwise() += b;
    z = z.cwiseMax(0.0F);
    maxpool(z, c.out_channels, c.size, n, pooled, argmax);
    x.swap(pooled);
  }
  if (shape_.head_grid != final_size_) x = grid_mean(x, final_size_, shape_.head_grid, n);
  ConstMatrixMap feats(x.data(), features_, static_cast<Eigen::Index>(n));
  ConstMatrixMap wfc(params_.data() + fc_weight_, shape_.num_classes, features_);
  ConstVectorMap bfc(params_.data() + fc_bias_, shape_.num_classes);
  MatrixMap out(logits.data(), shape_.num_classes, static_cast<Eigen::Index>(n));
  out.noalias() = wfc * feats;
  out.colwise() += bfc;
}

Network::BatchStats Network::accumulate_gradient(std::span<const uint8_t> inputs, std::span<const int> labels,
                                                 size_t n, double normalizer, std::span<float> grad) const {
  std::array<BlockCache, 3> cache;
  Matrix x = load_inputs(inputs, n, shape_.input_size);
  for (size_t l = 0; l < 3; ++l) {
    const auto& c = conv_[l];
    auto& k = cache[l];
    im2col(l == 0 ? x : cache[l - 1].pooled, c.in_channels, c.size, n, k.col);
    ConstMatrixMap w(params_.data() + c.weight, c.out_channels, 9 * c.in_channels);
    ConstVectorMap b(params_.data() + c.bias, c.out_channels);
    k.pre.noalias() = w * k.col;
    k.pre.colwise() += b;
    maxpool(k.pre.cwiseMax(0.0F), c.out_channels, c.size, n, k.pooled, k.argmax);
  }
  const int classes = shape_.num_classes;
  const bool averaged = shape_.head_grid != final_size_;
  Matrix head_in;
  if (averaged) head_in = grid_mean(cache[2].pooled, final_size_, shape_.head_grid, n);
  ConstMatrixMap feats(averaged ? head_in.data() : cache[2].pooled.data(), features_, static_cast<Eigen::Index>(n));
  ConstMatrixMap wfc(params_.data() + fc_weight_, classes, features_);
  ConstVectorMap bfc(params_.data() + fc_bias_, classes);
  Matrix logits = wfc * feats;
  logits.colwise() += bfc;

  BatchStats stats;
  Matrix dlogits(classes, static_cast<Eigen::Index>(n));
  const auto scale = static_cast<float>(1.0 / normalizer);
  for (size_t s = 0; s < n; ++s) {
    const auto col = static_cast<Eigen::Index>(s);
    Eigen::Index best = 0;
    const float mx = logits.col(col).maxCoeff(&best);
    double denom = 0;
    for (int k = 0; k < classes; ++k) denom += std::exp(static_cast<double>(logits(k, col) - mx));
    const int y = labels[s];
    stats.loss_sum += std::log(denom) - static_cast<double>(logits(y, col) - mx);
    if (best == y) ++stats.correct;
    for (int k = 0; k < classes; ++k) {
      const double p = std::exp(static_cast<double>(logits(k, col) - mx)) / denom;
      dlogits(k, col) = static_cast<float>(p - (k == y ? 1.0 : 0.0)) * scale;
    }
  }

  MatrixMap gwfc(grad.data() + fc_weight_, classes, features_);
  VectorMap gbfc(grad.data() + fc_bias_, classes);
  gwfc.noalias() += dlogits * feats.transpose();
  gbfc += dlogits.rowwise().sum();
  Matrix dfeat = wfc.transpose() * dlogits;

  Matrix dpooled;
  if (averaged) {
    dpooled = grid_mean_backward(dfeat, shape_.channels[2], final_size_, shape_.head_grid, n);
  } else {
    dpooled = Eigen::Map<Matrix>(dfeat.data(), shape_.channels[2],
                                 static_cast<Eigen::Index>(n) * (features_ / shape_.channels[2]));
  }
  Matrix dpre;
  Matrix dcol;
  for (int l = 2; l >= 0; --l) {
    const auto& c = conv_[static_cast<size_t>(l)];
    const auto& k = cache[static_cast<size_t>(l)];
    unpool(dpooled, k.argmax, c.out_channels, static_cast<size_t>(k.pre.cols()), dpre);
    dpre = (k.pre.array() > 0.0F).select(dpre, 0.0F);
    MatrixMap gw(grad.data() + c.weight, c.out_channels, 9 * c.in_channels);
    VectorMap gb(grad.data() + c.bias, c.out_channels);
    gw.noalias() += dpre * k.col.transpose();
    gb += dpre.rowwise().sum();
    if (l > 0) {
      ConstMatrixMap w(params_.data() + c.weight, c.out_channels, 9 * c.in_channels);
      dcol.noalias() = w.transpose() * dpre;
      col2im(dcol, c.in_channels, c.size, n, dpooled);
    }
  }
  return stats;
}

}  // namespace shiftlab::classifier
