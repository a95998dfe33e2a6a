// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>
#include <set>

#include "generators.hpp"
#include "oracles.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/scene/dataset.hpp"
#include "shiftlab/scene/render.hpp"

namespace shiftlab::scene {
namespace {

using testing::mask_centroid;
using testing::random_spec;

constexpr int kSize = 128;

size_t count(const std::vector<uint8_t>& mask) {
  size_t n = 0;
  for (uint8_t v : mask) n += v;
  return n;
}

size_t overlap(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i) n += (a[i] && b[i]) ? 1 : 0;
  return n;
}

double disagreement(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  size_t n = 0;
  for (size_t i = 0; i < a.size(); ++i) n += (a[i] != b[i]) ? 1 : 0;
  return static_cast<double>(n) / static_cast<double>(a.size());
}

double luminance(const ImageF& img, size_t i) {
  return 0.299 * img.data[i * 3] + 0.587 * img.data[i * 3 + 1] + 0.114 * img.data[i * 3 + 2];
}

SceneSpec base_spec(ActionId action, int angle = 0) {
  SceneSpec s;
  s.action = action;
  s.angle_deg = angle;
  s.frame = 4;
  s.image_size = kSize;
  return s;
}

TEST(ActionTest, ClassTable) {
  ASSERT_EQ(kActions.size(), 5U);
  int singles = 0;
  for (const auto& a : kActions) singles += a.has_dual_pose ? 0 : 1;
  EXPECT_EQ(singles, 1);
  EXPECT_FALSE(action_class(ActionId::kRubFingersInterlaced).has_dual_pose);
  EXPECT_EQ(action_class(ActionId::kRubPalm).motion, MotionPattern::kCircular);
  EXPECT_EQ(action_class(ActionId::kRubTips).motion, MotionPattern::kCircular);
  EXPECT_EQ(action_class(ActionId::kRubThumb).motion, MotionPattern::kCircular);
  EXPECT_EQ(action_class(ActionId::kRubBack).motion, MotionPattern::kBackAndForth);
  EXPECT_EQ(action_class(ActionId::kRubFingersInterlaced).motion, MotionPattern::kBackAndForth);
  EXPECT_EQ(parse_action("rub_thumb"), ActionId::kRubThumb);
  EXPECT_THROW(parse_action("rub_elbow"), ValidationError);
}

TEST(SceneSpecTest, RejectsInvalidFields) {
  auto expect_field = [](SceneSpec s, const std::string& field) {
    try {
      s.validate();
      FAIL() << "accepted invalid " << field;
    } catch (const ValidationError& e) {
      EXPECT_EQ(e.field(), field);
    }
  };
  SceneSpec s;
  s.angle_deg = 7;
  expect_field(s, "angle_deg");
  s = {};
  s.angle_deg = 95;
  expect_field(s, "angle_deg");
  s = {};
  s.frame = 20;
  expect_field(s, "frame");
  s = {};
  s.skin_tone = 10;
  expect_field(s, "skin_tone");
  s = {};
  s.background = -1;
  expect_field(s, "background");
  s = {};
  s.action = ActionId::kRubFingersInterlaced;
  s.dual = true;
  expect_field(s, "dual");
  s = {};
  s.shadow = ShadowConfig{1, 1.5, 1, 1};
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_THROW((ShadowConfig{1, 0.0, 1, 1}.validate()), ValidationError);
  EXPECT_THROW((ShadowConfig{4, 0.2, 1, 1}.validate()), ValidationError);
  EXPECT_THROW((ShadowConfig{1, 0.2, 3, 1}.validate()), ValidationError);
  EXPECT_THROW(render_scene(s, 1), ValidationError);
}

TEST(RenderTest, DeterministicAcrossRandomSpecs) {
  Rng rng(101);
  for (int i = 0; i < 100; ++i) {
    SceneSpec spec = random_spec(rng);
    if (rng.below(3) == 0) spec.shadow = ShadowConfig{1 + static_cast<int>(rng.below(3)), 0.2, 1, 2};
    const uint64_t seed = rng.next_u64();
    const auto a = render_scene(spec, seed);
    const auto b = render_scene(spec, seed);
    ASSERT_EQ(a.pixels, b.pixels) << "spec " << i;
    EXPECT_EQ(a.label, index_of(spec.action));
    EXPECT_EQ(a.spec, spec);
    for (float v : a.pixels.data) ASSERT_TRUE(v >= 0.0F && v <= 1.0F);
  }
}

TEST(RenderTest, SeedChangesNoiseOnly) {
  const SceneSpec spec = base_spec(ActionId::kRubTips);
  const auto a = render_scene(spec, 1);
  const auto b = render_scene(spec, 2);
  EXPECT_NE(a.pixels, b.pixels);
  EXPECT_LT(disagreement(a.foreground, b.foreground), 0.005);
}

TEST(RenderTest, RotationKeepsCentroid) {
  // The rotated composition's foreground centroid stays put within a pixel.
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    SceneSpec spec = random_spec(rng, kSize);
    spec.angle_deg = 0;
    const auto c0 = mask_centroid(render_scene(spec, 3).foreground, kSize);
    spec.angle_deg = 45;
    const auto c45 = mask_centroid(render_scene(spec, 3).foreground, kSize);
    const double dist = std::hypot(c45.first - c0.first, c45.second - c0.second);
    EXPECT_LE(dist, 1.0) << action_name(spec.action) << " frame " << spec.frame << " dual " << spec.dual;
  }
}

TEST(RenderTest, RotationMatchesRotatedMask) {
  for (const auto& cls : kActions) {
    for (int angle : {-90, -45, -15, 30, 60, 90}) {
      const auto m0 = render_scene(base_spec(cls.id), 5).foreground;
      const auto mt = render_scene(base_spec(cls.id, angle), 5).foreground;
      const auto [cx, cy] = mask_centroid(m0, kSize);
      const double t = angle * std::numbers::pi / 180.0;
      std::vector<uint8_t> expected(m0.size(), 0);
      for (int y = 0; y < kSize; ++y) {
        for (int x = 0; x < kSize; ++x) {
          const double rx = x - cx;
          const double ry = y - cy;
          const auto sx = static_cast<int>(std::lround(cx + std::cos(t) * rx + std::sin(t) * ry));
          const auto sy = static_cast<int>(std::lround(cy - std::sin(t) * rx + std::cos(t) * ry));
          if (sx >= 0 && sx < kSize && sy >= 0 && sy < kSize) {
            expected[static_cast<size_t>(y) * kSize + x] = m0[static_cast<size_t>(sy) * kSize + sx];
          }
        }
      }
      EXPECT_LE(disagreement(mt, expected), 0.02) << cls.name << " at " << angle;
    }
  }
}

TEST(RenderTest, DualIsMirrorOfNegatedAngle) {
  for (const auto& cls : kActions) {
    if (!cls.has_dual_pose) continue;
    for (int angle : {0, 20, -55, 90}) {
      SceneSpec dual = base_spec(cls.id, angle);
      dual.dual = true;
      const auto d = render_scene(dual, 9).foreground;
      const auto n = render_scene(base_spec(cls.id, -angle), 9).foreground;
      EXPECT_LE(disagreement(d, mirror_mask(n, kSize)), 0.02) << cls.name << " at " << angle;
    }
  }
}

TEST(RenderTest, FramesFormClosedCycle) {
  for (const auto& cls : kActions) {
    std::set<std::vector<uint8_t>> masks;
    for (int f = 0; f < kFramesPerCycle; ++f) {
      SceneSpec s = base_spec(cls.id);
      s.frame = f;
      masks.insert(render_scene(s, 1).foreground);
    }
    EXPECT_GT(masks.size(), 1U) << cls.name << " does not move";
    SceneSpec last = base_spec(cls.id);
    last.frame = kFramesPerCycle - 1;
    SceneSpec first = base_spec(cls.id);
    first.frame = 0;
    SceneSpec second = base_spec(cls.id);
    second.frame = 1;
    // Wrapping from 19 to 0 is one ordinary step of the cycle.
    const double wrap = disagreement(render_scene(last, 1).foreground, render_scene(first, 1).foreground);
    const double step = disagreement(render_scene(first, 1).foreground, render_scene(second, 1).foreground);
    EXPECT_LT(wrap, 3 * step + 0.01) << cls.name;
  }
}

TEST(ShadowTest, ZeroAlphaIsIdentity) {
  const auto base = render_scene(base_spec(ActionId::kRubBack), 4);
  const auto out = apply_shadow(base, ShadowConfig{2, 0.0, 1, 1});
  EXPECT_EQ(out.pixels, base.pixels);
}

TEST(ShadowTest, SmallAlphaApproachesBase) {
  const auto base = render_scene(base_spec(ActionId::kRubBack), 4);
  double prev = 1e9;
  for (double alpha : {0.4, 0.1, 0.01, 0.001}) {
    const auto out = apply_shadow(base, ShadowConfig{3, alpha, 1, 1});
    double worst = 0;
    for (size_t i = 0; i < out.pixels.data.size(); ++i) {
      worst = std::max(worst, static_cast<double>(std::abs(out.pixels.data[i] - base.pixels.data[i])));
    }
    EXPECT_LT(worst, prev);
    EXPECT_LE(worst, alpha * kShadowDarkening + 1e-6);
    prev = worst;
  }
}

TEST(ShadowTest, RejectsDoubleApplication) {
  const auto base = render_scene(base_spec(ActionId::kRubBack), 4);
  const auto once = apply_shadow(base, ShadowConfig{1, 0.4, 1, 1});
  EXPECT_THROW(apply_shadow(once, ShadowConfig{1, 0.4, 1, 1}), ValidationError);
}

TEST(ShadowTest, CoveredLuminanceDecreasesWithAlpha) {
  for (ActionId a : {ActionId::kRubBack, ActionId::kRubThumb}) {
    const auto base = render_scene(base_spec(a), 8);
    double prev_covered = 1e9;
    double prev_mean = 1e9;
    for (double alpha : {0.2, 0.4, 0.6, 0.8}) {
      const auto out = apply_shadow(base, ShadowConfig{2, alpha, 1, 1});
      double covered = 0;
      double mean = 0;
      size_t n = 0;
      for (size_t i = 0; i < out.shadow_mask.size(); ++i) {
        mean += luminance(out.pixels, i);
        if (out.shadow_mask[i] && base.foreground[i]) {
          covered += luminance(out.pixels, i);
          ++n;
        }
      }
      ASSERT_GT(n, 0U);
      covered /= static_cast<double>(n);
      EXPECT_LT(covered, prev_covered);
      EXPECT_LE(mean, prev_mean);
      prev_covered = covered;
      prev_mean = mean;
    }
  }
}

TEST(ShadowTest, MaskAreaGrowsWithWidth) {
  for (int t : {1, 2}) {
    for (int r : {1, 2}) {
      size_t prev = 0;
      for (int w : {1, 2, 3}) {
        const size_t area = count(shadow_band_mask(kSize, ShadowConfig{w, 0.4, t, r}));
        EXPECT_GT(area, prev) << "t" << t << " r" << r << " w" << w;
        prev = area;
      }
    }
  }
}

TEST(ShadowTest, CoverageOrderingAtZeroDegrees) {
  // Translation 1 and rotation 1 cover more hand pixels, for every base.
  for (const auto& cls : kActions) {
    for (bool dual : {false, true}) {
      if (dual && !cls.has_dual_pose) continue;
      for (int frame = 0; frame < kFramesPerCycle; frame += 3) {
        SceneSpec s = base_spec(cls.id);
        s.dual = dual;
        s.frame = frame;
        const auto fg = render_scene(s, 2).foreground;
        for (int w : {1, 2, 3}) {
          auto covered = [&](int t, int r) { return overlap(fg, shadow_band_mask(kSize, ShadowConfig{w, 0.4, t, r})); };
          for (int r : {1, 2}) EXPECT_GT(covered(1, r), covered(2, r)) << cls.name << " f" << frame << " w" << w;
          for (int t : {1, 2}) EXPECT_GT(covered(t, 1), covered(t, 2)) << cls.name << " f" << frame << " w" << w;
        }
      }
    }
  }
}

TEST(ShadowTest, ShadowRowRendersOnItsBaseImage) {
  ManifestRow row;
  row.action = ActionId::kRubThumb;
  row.angle_deg = -35;
  row.frame = 11;
  row.seed = derive_sample_seed(3, row.action, false, row.angle_deg, row.frame, 0, 0);
  const Image8 plain = render_row(row, 64);
  row.shadow = ShadowConfig{1, 0.2, 2, 2};
  const Image8 shadowed = render_row(row, 64);
  SceneSpec plain_spec = row.scene_spec(64);
  plain_spec.shadow.reset();
  const auto base = render_scene(plain_spec, row.seed);
  EXPECT_EQ(shadowed, quantize(apply_shadow(base, *row.shadow).pixels));
  EXPECT_EQ(plain, quantize(base.pixels));
}

TEST(DatasetTest, DefaultGridCounts) {
  GenerationConfig cfg;
  const auto m = enumerate_samples(cfg.resolved());
  EXPECT_EQ(m.rows.size(), 9U * 37 * 20 * 4);
  EXPECT_EQ(m.rows.size(), 26640U);

  GenerationConfig with_shadow;
  with_shadow.shadow = ShadowGrid{};
  const auto ms = enumerate_samples(with_shadow.resolved());
  // Shadows cover one pose variant of two actions, 48 conditions each.
  const size_t per_action = 37 * 20 * 4;
  EXPECT_EQ(ms.rows.size(), 26640U + 2 * per_action * 48);
  std::set<std::string> paths;
  for (const auto& r : ms.rows) paths.insert(r.relative_path);
  EXPECT_EQ(paths.size(), ms.rows.size());
}

TEST(DatasetTest, SeedsIgnoreShadowAttributes) {
  GenerationConfig cfg;
  cfg.frames = {0, 1};
  cfg.angles = {0, 45};
  cfg.shadow = ShadowGrid{};
  const auto m = enumerate_samples(cfg.resolved());
  std::map<std::string, uint64_t> seeds;
  for (const auto& r : m.rows) {
    auto [it, inserted] = seeds.emplace(r.base_key(), r.seed);
    if (!inserted) EXPECT_EQ(it->second, r.seed) << r.relative_path;
  }
}

TEST(DatasetTest, RejectsEmptyGrids) {
  GenerationConfig cfg;
  cfg.skin_tones = {};
  EXPECT_THROW(cfg.resolved(), ValidationError);
  cfg = {};
  cfg.angles = {0, 3};
  EXPECT_THROW(cfg.resolved(), ValidationError);
}

TEST(DatasetTest, GenerationIsByteIdentical) {
  const auto dir = std::filesystem::temp_directory_path() / "shiftlab_scene_test";
  std::filesystem::remove_all(dir);
  GenerationConfig cfg;
  cfg.actions = {ActionId::kRubBack, ActionId::kRubFingersInterlaced};
  cfg.angles = {-10, 0, 10};
  cfg.frames = {0, 7};
  cfg.skin_tones = {3};
  cfg.backgrounds = {5};
  cfg.image_size = 48;
  cfg.shadow = ShadowGrid{};
  cfg.shadow->actions = {ActionId::kRubBack};
  cfg.shadow->alphas = {0.4};
  const auto a = generate_dataset(cfg.resolved(), dir / "a", 2);
  const auto b = generate_dataset(cfg.resolved(), dir / "b", 1);
  EXPECT_EQ(a.to_jsonl(), b.to_jsonl());
  EXPECT_EQ(read_png(dir / "a" / a.rows.back().relative_path), read_png(dir / "b" / a.rows.back().relative_path));
  EXPECT_EQ(read_png(dir / "a" / a.rows.front().relative_path), render_row(a.rows.front(), 48));
  const auto reloaded = DatasetManifest::from_jsonl(a.to_jsonl(), 48);
  EXPECT_EQ(reloaded.rows, a.rows);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace shiftlab::scene
