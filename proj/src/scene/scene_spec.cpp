// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/scene/scene_spec.hpp"

#include <cmath>
#include <string>

#include "shiftlab/common/error.hpp"

namespace shiftlab::scene {

ActionId parse_action(std::string_view name) {
  for (const auto& a : kActions) {
    if (a.name == name) return a.id;
  }
  throw ValidationError("action", "unknown action '" + std::string(name) + "'");
}

ActionId action_from_index(int index) {
  if (index < 0 || index >= kNumActions) {
    throw ValidationError("class_id", "must be in [0, 5), got " + std::to_string(index));
  }
  return static_cast<ActionId>(index);
}

std::vector<int> angle_grid() {
  std::vector<int> grid;
  for (int a = -kMaxAngle; a <= kMaxAngle; a += kAngleStep) grid.push_back(a);
  return grid;
}

void ShadowConfig::validate() const {
  if (width_level < 1 || width_level > 3) {
    throw ValidationError("shadow.width_level", "must be 1, 2 or 3, got " + std::to_string(width_level));
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("shadow.alpha", "must lie in (0, 1], got " + std::to_string(alpha));
  }
  if (translation_id != 1 && translation_id != 2) {
    throw ValidationError("shadow.translation_id", "must be 1 or 2, got " + std::to_string(translation_id));
  }
  if (rotation_id != 1 && rotation_id != 2) {
    throw ValidationError("shadow.rotation_id", "must be 1 or 2, got " + std::to_string(rotation_id));
  }
}

void SceneSpec::validate() const {
  const int a = index_of(action);
  if (a < 0 || a >= kNumActions) throw ValidationError("action", "unknown action id " + std::to_string(a));
  if (dual && !action_class(action).has_dual_pose) {
    throw ValidationError("dual", std::string(action_name(action)) + " has no dual pose");
  }
  if (angle_deg < -kMaxAngle || angle_deg > kMaxAngle || angle_deg % kAngleStep != 0) {
    throw ValidationError("angle_deg", "must be a multiple of 5 in [-90, 90], got " + std::to_string(angle_deg));
  }
  if (frame < 0 || frame >= kFramesPerCycle) {
    throw ValidationError("frame", "must be in [0, 19], got " + std::to_string(frame));
  }
  if (skin_tone < 0 || skin_tone >= kNumSkinTones) {
    throw ValidationError("skin_tone", "must be in [0, 9], got " + std::to_string(skin_tone));
  }
  if (background < 0 || background >= kNumBackgrounds) {
    throw ValidationError("background", "must be in [0, 9], got " + std::to_string(background));
  }
  if (image_size < 16 || image_size > 4096) {
    throw ValidationError("image_size", "must be in [16, 4096], got " + std::to_string(image_size));
  }
  if (shadow) shadow->validate();
}

}  // namespace shiftlab::scene
