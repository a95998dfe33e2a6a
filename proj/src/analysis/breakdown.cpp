// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/analysis/breakdown.hpp"

#include <cstdlib>
#include <string>

#include "shiftlab/common/error.hpp"
#include "shiftlab/scene/scene_spec.hpp"

namespace shiftlab::analysis {

void BreakdownCriteria::validate() const {
  if (!(floor > 0 && floor < 1)) throw ValidationError("criteria.floor", "must lie in (0, 1)");
  if (!(step_drop > 0 && step_drop < 1)) throw ValidationError("criteria.step_drop", "must lie in (0, 1)");
  if (step_deg <= 0 || step_deg % scene::kAngleStep != 0 || scene::kMaxAngle % step_deg != 0) {
    throw ValidationError("criteria.step_deg", "must be a multiple of 5 dividing 90");
  }
}

void to_json(nlohmann::ordered_json& j, const BreakdownCriteria& c) {
  j = nlohmann::ordered_json{{"floor", c.floor}, {"step_drop", c.step_drop}, {"step_deg", c.step_deg}};
}

void from_json(const nlohmann::ordered_json& j, BreakdownCriteria& c) {
  c = BreakdownCriteria{};
  if (j.contains("floor")) c.floor = j.at("floor").get<double>();
  if (j.contains("step_drop")) c.step_drop = j.at("step_drop").get<double>();
  if (j.contains("step_deg")) c.step_deg = j.at("step_deg").get<int>();
}

std::string_view trigger_name(Trigger t) {
  switch (t) {
    case Trigger::kNone: return "none";
    case Trigger::kFloor: return "floor";
    case Trigger::kStepDrop: return "step_drop";
    case Trigger::kBoth: return "both";
  }
  return "none";
}

Trigger parse_trigger(std::string_view name) {
  for (Trigger t : {Trigger::kNone, Trigger::kFloor, Trigger::kStepDrop, Trigger::kBoth}) {
    if (trigger_name(t) == name) return t;
  }
  throw ValidationError("trigger", "unknown trigger '" + std::string(name) + "'");
}

DirectionResult find_breakdown(const AccuracyCurve& curve, int direction, const BreakdownCriteria& criteria) {
  criteria.validate();
  if (direction != 1 && direction != -1) throw ValidationError("direction", "must be +1 or -1");
  auto value = [&](int angle) {
    if (!curve.has(angle)) {
      throw ValidationError("curve", "missing grid point " + std::to_string(angle) + " for action " +
                                         std::to_string(curve.action));
    }
    return curve.at(angle);
  };
  double prev = value(0);
  for (int step = criteria.step_deg; step <= scene::kMaxAngle; step += criteria.step_deg) {
    const int angle = direction * step;
    const double acc = value(angle);
    const bool floor_hit = acc < criteria.floor - kCompareEps;
    const bool drop_hit = prev - acc > criteria.step_drop + kCompareEps;
    if (floor_hit || drop_hit) {
      return {angle, floor_hit && drop_hit ? Trigger::kBoth : (floor_hit ? Trigger::kFloor : Trigger::kStepDrop)};
    }
    prev = acc;
  }
  return {};
}

BreakdownResult breakdown_points(const AccuracyCurve& curve, const BreakdownCriteria& criteria) {
  BreakdownResult r;
  r.action = curve.action;
  r.positive = find_breakdown(curve, +1, criteria);
  r.negative = find_breakdown(curve, -1, criteria);
  if (r.positive.angle && r.negative.angle) {
    r.mean_bp = (std::abs(*r.positive.angle) + std::abs(*r.negative.angle)) / 2.0;
  }
  return r;
}

}  // namespace shiftlab::analysis
