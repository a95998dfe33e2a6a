// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace shiftlab::analysis {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::optional<double> y_min;
  std::optional<double> y_max;
};

/// Static SVG line chart; output depends only on the arguments.
std::string svg_line_chart(const Axes& axes, const std::vector<Series>& series);

/// Grouped bars; a missing value is drawn as a "NONE" label.
struct BarGroup {
  std::string name;
  std::vector<std::optional<double>> values;  // one per category
};

std::string svg_bar_chart(const Axes& axes, const std::vector<std::string>& categories,
                          const std::vector<BarGroup>& groups);

}  // namespace shiftlab::analysis
