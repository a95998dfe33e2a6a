// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/scene/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "composition.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/common/rng.hpp"

namespace shiftlab::scene {

namespace {

using detail::Primitive;
using detail::Vec2;

using Rgb = std::array<float, 3>;

constexpr std::array<Rgb, kNumSkinTones> kSkinTones = {{
    {0.98F, 0.87F, 0.78F},
    {0.95F, 0.80F, 0.69F},
    {0.91F, 0.75F, 0.62F},
    {0.87F, 0.69F, 0.55F},
    {0.80F, 0.60F, 0.46F},
    {0.72F, 0.52F, 0.38F},
    {0.62F, 0.44F, 0.31F},
    {0.52F, 0.36F, 0.25F},
    {0.42F, 0.29F, 0.20F},
    {0.33F, 0.22F, 0.15F},
}};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  const auto ft = static_cast<float>(t);
  return {a[0] + (b[0] - a[0]) * ft, a[1] + (b[1] - a[1]) * ft, a[2] + (b[2] - a[2]) * ft};
}

double lattice(int64_t ix, int64_t iy, uint64_t salt) {
  const uint64_t h = mix_seed(salt, {ix, iy});
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

/// Value noise in [0, 1] with smoothstep interpolation.
double value_noise(double u, double v, uint64_t salt) {
  const double fu = std::floor(u);
  const double fv = std::floor(v);
  const auto ix = static_cast<int64_t>(fu);
  const auto iy = static_cast<int64_t>(fv);
  const double tu = smooth(u - fu);
  const double tv = smooth(v - fv);
  const double a = lattice(ix, iy, salt);
  const double b = lattice(ix + 1, iy, salt);
  const double c = lattice(ix, iy + 1, salt);
  const double d = lattice(ix + 1, iy + 1, salt);
  return (a + (b - a) * tu) + ((c + (d - c) * tu) - (a + (b - a) * tu)) * tv;
}

double fractal_noise(double u, double v, uint64_t salt) {
  double sum = 0;
  double amp = 0.5;
  double norm = 0;
  for (int o = 0; o < 3; ++o) {
    sum += amp * value_noise(u, v, salt + o);
    norm += amp;
    u *= 2.0;
    v *= 2.0;
    amp *= 0.5;
  }
  return sum / norm;
}

double frac(double x) { return x - std::floor(x); }

/// Floor textures in canvas-width units; (u, v) already include the
/// per-sample phase offset.
Rgb background_color(int id, double u, double v) {
  constexpr double kTau = 2.0 * std::numbers::pi;
  switch (id) {
    case 0: {  // checker
      const int parity = (static_cast<int>(std::floor(u / 0.125)) + static_cast<int>(std::floor(v / 0.125))) & 1;
      return parity ? Rgb{0.55F, 0.55F, 0.58F} : Rgb{0.35F, 0.36F, 0.40F};
    }
    case 1:  // diagonal stripes
      return mix({0.30F, 0.45F, 0.35F}, {0.20F, 0.33F, 0.25F}, 0.5 + 0.5 * std::sin((u + v) * kTau / 0.1));
    case 2:  // fractal value noise
      return mix({0.47F, 0.44F, 0.40F}, {0.22F, 0.21F, 0.19F}, fractal_noise(u * 6.0, v * 6.0, 17));
    case 3:  // linear gradient
      return mix({0.20F, 0.25F, 0.45F}, {0.45F, 0.52F, 0.66F}, frac(u * 0.5));
    case 4: {  // wood grain
      const double r = std::hypot(u + 0.7, v * 0.35 + 0.3);
      const double grain = 0.5 + 0.5 * std::sin(kTau * (r * 14.0 + 1.5 * fractal_noise(u * 3.0, v * 12.0, 29)));
      return mix({0.50F, 0.34F, 0.20F}, {0.33F, 0.21F, 0.11F}, grain);
    }
    case 5: {  // tiles with grout
      const double gu = frac(u / 0.2);
      const double gv = frac(v / 0.2);
      const bool grout = gu < 0.06 || gv < 0.06;
      return grout ? Rgb{0.78F, 0.78F, 0.74F} : Rgb{0.52F, 0.60F, 0.63F};
    }
    case 6: {  // radial gradient
      const double r = std::hypot(frac(u * 0.5) - 0.5, frac(v * 0.5) - 0.5);
      return mix({0.62F, 0.62F, 0.56F}, {0.28F, 0.30F, 0.28F}, std::min(1.0, r * 1.8));
    }
    case 7: {  // granite speckle
      const double n = value_noise(u * 48.0, v * 48.0, 41);
      const double base = fractal_noise(u * 5.0, v * 5.0, 43);
      Rgb c = mix({0.44F, 0.44F, 0.47F}, {0.34F, 0.34F, 0.37F}, base);
      if (n > 0.78) c = {0.12F, 0.12F, 0.13F};
      if (n < 0.12) c = {0.80F, 0.80F, 0.82F};
      return c;
    }
    case 8: {  // planks
      const double p = frac(v / 0.15);
      if (p < 0.05) return {0.18F, 0.12F, 0.08F};
      return mix({0.44F, 0.31F, 0.22F}, {0.32F, 0.22F, 0.15F}, value_noise(u * 2.0, v * 30.0, 53));
    }
    case 9: {  // brick
      const double row = std::floor(v / 0.08);
      const double shift = (static_cast<int64_t>(row) & 1) ? 0.08 : 0.0;
      const double bu = frac((u + shift) / 0.16);
      const double bv = frac(v / 0.08);
      const bool mortar = bu < 0.08 || bv < 0.14;
      return mortar ? Rgb{0.70F, 0.68F, 0.62F} : Rgb{0.56F, 0.26F, 0.20F};
    }
    default:
      break;
  }
  return {0.5F, 0.5F, 0.5F};
}

Vec2 pixel_centre(int x, int y, int size) {
  return {(x + 0.5) / size - 0.5, (y + 0.5) / size - 0.5};
}

/// Fraction of the pixel covered, from the signed distance in canvas units.
double coverage_from_distance(double d, int size) { return std::clamp(0.5 - d * size, 0.0, 1.0); }

/// True when q is far enough outside the primitive that coverage is zero.
bool culled(const Primitive& p, Vec2 q, double margin) {
  const double dx = q.x - p.bound_centre.x;
  const double dy = q.y - p.bound_centre.y;
  const double r = p.bound_radius + margin;
  return dx * dx + dy * dy > r * r;
}

double union_distance(const std::vector<Primitive>& prims, Vec2 q, double margin) {
  double d = 1e9;
  for (const auto& p : prims) {
    if (culled(p, q, margin)) continue;
    d = std::min(d, detail::signed_distance(p, q));
  }
  return d;
}

/// Centroid of the unrotated, unmirrored composition's pixel mask.
Vec2 composition_centroid(const std::vector<Primitive>& prims, int size) {
  double sx = 0;
  double sy = 0;
  double n = 0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Vec2 p = pixel_centre(x, y, size);
      const double a = coverage_from_distance(union_distance(prims, p, 1.0 / size), size);
      if (a >= 0.5) {
        sx += p.x;
        sy += p.y;
        n += 1;
      }
    }
  }
  if (n == 0) return {0, 0};
  return {sx / n, sy / n};
}

struct Band {
  Vec2 normal;
  double offset;
  double half_width;
};

// The pole's shadow pivots about a fixed foot outside the hands. Rotation 1
// runs through the frame centre, rotation 2 is turned 30 degrees about the
// foot, and translation 2 shifts either line 0.18 further from the centre.
Band shadow_band(const ShadowConfig& cfg) {
  constexpr double kHalfWidths[] = {0.05, 0.065, 0.08};
  constexpr double kBaseDeg = 40.0;
  constexpr double kTurnDeg = -30.0;
  constexpr double kFootDistance = 0.30;
  constexpr double kShift = 0.18;
  const double base = kBaseDeg * std::numbers::pi / 180.0;
  const Vec2 foot{-kFootDistance * std::cos(base), -kFootDistance * std::sin(base)};
  const double t = (kBaseDeg + (cfg.rotation_id == 1 ? 0.0 : kTurnDeg)) * std::numbers::pi / 180.0;
  const Vec2 normal{-std::sin(t), std::cos(t)};
  double offset = normal.x * foot.x + normal.y * foot.y;
  if (std::abs(offset) < 1e-12) offset = 0.0;
  if (cfg.translation_id == 2) offset += offset < 0 ? -kShift : kShift;
  return {normal, offset, kHalfWidths[cfg.width_level - 1]};
}

}  // namespace

std::array<float, 3> skin_tone_rgb(int id) {
  if (id < 0 || id >= kNumSkinTones) throw ValidationError("skin_tone", "must be in [0, 9]");
  return kSkinTones[static_cast<size_t>(id)];
}

RenderedSample render_scene(const SceneSpec& spec, uint64_t seed) {
  spec.validate();
  const int size = spec.image_size;
  Rng rng(seed);
  const double phase_u = rng.uniform();
  const double phase_v = rng.uniform();
  const auto skin_gain = static_cast<float>(1.0 + rng.uniform(-0.03, 0.03));

  const std::vector<Primitive> prims = detail::compose(spec.action, spec.frame);
  Vec2 pivot = composition_centroid(prims, size);
  if (spec.dual) pivot.x = -pivot.x;
  const double theta = spec.angle_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  const Rgb skin = kSkinTones[static_cast<size_t>(spec.skin_tone)];
  const double rim_width = 0.018;
  const double margin = 1.0 / size;

  RenderedSample out;
  out.pixels = ImageF(size, size);
  out.coverage.assign(static_cast<size_t>(size) * size, 0.0F);
  out.foreground.assign(static_cast<size_t>(size) * size, 0);
  out.spec = spec;
  out.spec.shadow.reset();
  out.label = index_of(spec.action);
  out.rng_seed = seed;

  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const Vec2 p = pixel_centre(x, y, size);
      Rgb color = background_color(spec.background, p.x + phase_u, p.y + phase_v);
      // Inverse map: undo the rotation about the pivot, then undo the mirror.
      const Vec2 r = p - pivot;
      Vec2 q{pivot.x + ct * r.x + st * r.y, pivot.y - st * r.x + ct * r.y};
      if (spec.dual) q.x = -q.x;
      double cover = 0;
      for (const auto& prim : prims) {
        if (culled(prim, q, margin)) continue;
        const double d = detail::signed_distance(prim, q);
        const double a = coverage_from_distance(d, size);
        if (a <= 0) continue;
        const double rim = std::clamp((d + rim_width) / rim_width, 0.0, 1.0);
        const auto gain = static_cast<float>(prim.shade * (1.0 - 0.4 * rim)) * skin_gain;
        const Rgb c{skin[0] * gain, skin[1] * gain, skin[2] * gain};
        color = mix(color, c, a);
        cover = std::max(cover, a);
      }
      for (int c = 0; c < 3; ++c) {
        const double noise = rng.uniform(-0.015, 0.015);
        out.pixels.at(x, y, c) = std::clamp(static_cast<float>(color[c] + noise), 0.0F, 1.0F);
      }
      out.coverage[static_cast<size_t>(y) * size + x] = static_cast<float>(cover);
      out.foreground[static_cast<size_t>(y) * size + x] = cover >= 0.5 ? 1 : 0;
    }
  }
  if (spec.shadow) return apply_shadow(out, *spec.shadow);
  return out;
}

std::vector<float> shadow_band_coverage(int image_size, const ShadowConfig& cfg) {
  cfg.validate();
  const Band band = shadow_band(cfg);
  std::vector<float> cov(static_cast<size_t>(image_size) * image_size);
  for (int y = 0; y < image_size; ++y) {
    for (int x = 0; x < image_size; ++x) {
      const Vec2 p = pixel_centre(x, y, image_size);
      const double dist = std::abs(p.x * band.normal.x + p.y * band.normal.y - band.offset);
      cov[static_cast<size_t>(y) * image_size + x] =
          static_cast<float>(coverage_from_distance(dist - band.half_width, image_size));
    }
  }
  return cov;
}

std::vector<uint8_t> shadow_band_mask(int image_size, const ShadowConfig& cfg) {
  const auto cov = shadow_band_coverage(image_size, cfg);
  std::vector<uint8_t> mask(cov.size());
  for (size_t i = 0; i < cov.size(); ++i) mask[i] = cov[i] >= 0.5F ? 1 : 0;
  return mask;
}

RenderedSample apply_shadow(const RenderedSample& base, const ShadowConfig& cfg) {
  if (base.spec.shadow || !base.shadow_mask.empty()) {
    throw ValidationError("base", "shadow already applied");
  }
  if (cfg.alpha == 0.0) return base;
  cfg.validate();
  const int size = base.pixels.width;
  const auto cov = shadow_band_coverage(size, cfg);
  RenderedSample out = base;
  out.spec.shadow = cfg;
  out.shadow_mask.resize(cov.size());
  const double strength = cfg.alpha * kShadowDarkening;
  for (size_t i = 0; i < cov.size(); ++i) {
    const auto factor = static_cast<float>(1.0 - strength * cov[i]);
    for (int c = 0; c < 3; ++c) out.pixels.data[i * 3 + c] *= factor;
    out.shadow_mask[i] = cov[i] >= 0.5F ? 1 : 0;
  }
  return out;
}

std::vector<uint8_t> mirror_mask(const std::vector<uint8_t>& mask, int size) {
  std::vector<uint8_t> out(mask.size());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      out[static_cast<size_t>(y) * size + x] = mask[static_cast<size_t>(y) * size + (size - 1 - x)];
    }
  }
  return out;
}

}  // namespace shiftlab::scene
