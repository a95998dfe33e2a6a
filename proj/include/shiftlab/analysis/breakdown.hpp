// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "shiftlab/classifier/evaluate.hpp"

namespace shiftlab::analysis {

using classifier::AccuracyCurve;

/// Accuracy differences are k/n fractions, so genuine margins are far above
/// this; it only absorbs rounding in comparisons such as 1.0 - 0.85 > 0.15.
inline constexpr double kCompareEps = 1e-9;

struct BreakdownCriteria {
  double floor = 0.60;
  double step_drop = 0.15;
  int step_deg = 5;

  void validate() const;
};

void to_json(nlohmann::ordered_json& j, const BreakdownCriteria& c);
void from_json(const nlohmann::ordered_json& j, BreakdownCriteria& c);

enum class Trigger { kNone, kFloor, kStepDrop, kBoth };

std::string_view trigger_name(Trigger t);
Trigger parse_trigger(std::string_view name);

struct DirectionResult {
  std::optional<int> angle;  // nullopt is a censored direction (NONE)
  Trigger trigger = Trigger::kNone;

  bool operator==(const DirectionResult&) const = default;
};

struct BreakdownResult {
  int action = 0;
  DirectionResult positive;
  DirectionResult negative;
  std::optional<double> mean_bp;  // only when both directions broke down

  bool operator==(const BreakdownResult&) const = default;
};

/// Scans direction*step, direction*2*step, ... up to direction*90 and stops
/// at the first angle where acc < floor or acc(prev) - acc > step_drop.
/// Throws ValidationError if a scanned grid point is missing.
DirectionResult find_breakdown(const AccuracyCurve& curve, int direction, const BreakdownCriteria& criteria);

BreakdownResult breakdown_points(const AccuracyCurve& curve, const BreakdownCriteria& criteria);

}  // namespace shiftlab::analysis
