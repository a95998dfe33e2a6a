// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference implementations used by unit and acceptance tests.

#pragma once

#include <cmath>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "shiftlab/scene/dataset.hpp"

namespace shiftlab::testing {

inline constexpr double kOracleTie = 1e-9;

struct OracleBreakdown {
  std::optional<int> angle;
  std::string trigger = "none";
};

/// Evaluates both predicates at every grid angle of one direction, then takes
/// the triggered angle closest to 0. Values within kOracleTie of a threshold
/// count as equal and never trigger.
inline OracleBreakdown oracle_breakdown(const std::vector<double>& acc, int direction, double floor = 0.60,
                                        double step = 0.15) {
  auto at = [&](int angle) { return acc[static_cast<size_t>((angle + 90) / 5)]; };
  std::map<int, std::pair<bool, bool>> hits;
  for (int angle = 5; angle <= 90; angle += 5) {
    const double cur = at(direction * angle);
    const double before = at(direction * (angle - 5));
    const bool tie_floor = std::abs(cur - floor) <= kOracleTie;
    const bool tie_step = std::abs((before - cur) - step) <= kOracleTie;
    hits[angle] = {cur < floor && !tie_floor, before - cur > step && !tie_step};
  }
  for (const auto& [angle, h] : hits) {
    if (h.first || h.second) {
      return {direction * angle, h.first && h.second ? "both" : (h.first ? "floor" : "step_drop")};
    }
  }
  return {};
}

/// Foreground centroid in pixel units, or {nan, nan} for an empty mask.
inline std::pair<double, double> mask_centroid(const std::vector<uint8_t>& mask, int size) {
  double sx = 0;
  double sy = 0;
  double n = 0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (mask[static_cast<size_t>(y) * size + x]) {
        sx += x;
        sy += y;
        n += 1;
      }
    }
  }
  if (n == 0) return {std::nan(""), std::nan("")};
  return {sx / n, sy / n};
}

/// Tallies per-(action, angle) accuracy from raw rows: (action, angle, correct).
inline std::map<std::pair<int, int>, std::pair<long, long>> tally(
    const std::vector<std::tuple<int, int, bool>>& rows) {
  std::map<std::pair<int, int>, std::pair<long, long>> out;
  for (const auto& [action, angle, correct] : rows) {
    auto& cell = out[{action, angle}];
    cell.first += correct ? 1 : 0;
    cell.second += 1;
  }
  return out;
}

}  // namespace shiftlab::testing
