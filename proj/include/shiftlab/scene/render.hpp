// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "shiftlab/common/image.hpp"
#include "shiftlab/scene/scene_spec.hpp"

namespace shiftlab::scene {

struct RenderedSample {
  ImageF pixels;
  std::vector<float> coverage;       // antialiased hand coverage in [0, 1]
  std::vector<uint8_t> foreground;   // coverage >= 0.5
  std::vector<uint8_t> shadow_mask;  // projected band; empty unless a shadow was applied
  SceneSpec spec;
  int label = 0;
  uint64_t rng_seed = 0;
};

/// Pure function of (spec, seed). When spec.shadow is set the shadow-free
/// image is rendered first and the band is composited on top.
RenderedSample render_scene(const SceneSpec& spec, uint64_t seed);

/// Multiplies every pixel by (1 - alpha * kShadowDarkening * band coverage),
/// so the band falls on hand and background alike. alpha == 0 returns the
/// base unchanged.
RenderedSample apply_shadow(const RenderedSample& base, const ShadowConfig& cfg);

/// Fractional band coverage per pixel, row-major.
std::vector<float> shadow_band_coverage(int image_size, const ShadowConfig& cfg);

/// coverage >= 0.5
std::vector<uint8_t> shadow_band_mask(int image_size, const ShadowConfig& cfg);

std::array<float, 3> skin_tone_rgb(int id);

/// Mirror of a row-major mask about the vertical centre line.
std::vector<uint8_t> mirror_mask(const std::vector<uint8_t>& mask, int size);

}  // namespace shiftlab::scene
