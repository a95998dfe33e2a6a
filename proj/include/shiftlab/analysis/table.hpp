// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>
#include <vector>

#include "shiftlab/analysis/breakdown.hpp"
#include "shiftlab/analysis/shadow.hpp"

namespace shiftlab::analysis {

/// Comma-separated table with leading "# " comment lines. Cells never
/// contain commas or quotes, so no quoting is done.
struct CsvTable {
  std::vector<std::string> comments;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
  static CsvTable parse(const std::string& text);

  /// Column index by name; throws std::runtime_error when absent.
  size_t column(const std::string& name) const;
  /// Value of `# key: value` comment, empty when absent.
  std::string comment_value(const std::string& key) const;
};

inline constexpr char kNone[] = "NONE";

/// Columns: action, condition, angle, count, correct, accuracy.
CsvTable curves_table(const std::vector<std::pair<std::string, AccuracyCurve>>& labelled);
/// Inverse of curves_table, grouped by condition in first-seen order.
std::vector<std::pair<std::string, std::vector<AccuracyCurve>>> curves_from_table(const CsvTable& table);

/// Columns: action, condition, positive_bp, positive_trigger, negative_bp,
/// negative_trigger, mean_bp. Censored directions are written as NONE.
CsvTable breakdown_table(const std::vector<std::pair<std::string, BreakdownResult>>& labelled);

/// Columns: action, attribute, level, total_drop, samples.
CsvTable condition_table(const std::vector<ConditionResult>& results);

std::string action_label(int action);
int action_from_label(const std::string& label);

}  // namespace shiftlab::analysis
