// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <span>
#include <string_view>

namespace shiftlab::scene {

enum class ActionId : int {
  kRubPalm = 0,
  kRubBack = 1,
  kRubFingersInterlaced = 2,
  kRubThumb = 3,
  kRubTips = 4,
};

enum class MotionPattern { kCircular, kBackAndForth };

struct ActionClass {
  ActionId id;
  std::string_view name;
  bool has_dual_pose;
  MotionPattern motion;
};

inline constexpr int kNumActions = 5;

inline constexpr std::array<ActionClass, kNumActions> kActions = {{
    {ActionId::kRubPalm, "rub_palm", true, MotionPattern::kCircular},
    {ActionId::kRubBack, "rub_back", true, MotionPattern::kBackAndForth},
    {ActionId::kRubFingersInterlaced, "rub_fingers_interlaced", false, MotionPattern::kBackAndForth},
    {ActionId::kRubThumb, "rub_thumb", true, MotionPattern::kCircular},
    {ActionId::kRubTips, "rub_tips", true, MotionPattern::kCircular},
}};

constexpr int index_of(ActionId id) { return static_cast<int>(id); }

constexpr const ActionClass& action_class(ActionId id) { return kActions[index_of(id)]; }

constexpr std::string_view action_name(ActionId id) { return action_class(id).name; }

/// Throws ValidationError("action", ...) for unknown names.
ActionId parse_action(std::string_view name);

/// Throws ValidationError("class_id", ...) outside [0, 5).
ActionId action_from_index(int index);

}  // namespace shiftlab::scene
