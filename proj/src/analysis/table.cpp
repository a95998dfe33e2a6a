// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/analysis/table.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "shiftlab/common/format.hpp"

namespace shiftlab::analysis {

namespace {

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].find_first_of(",\n\"") != std::string::npos) {
      throw std::runtime_error("csv cell contains a separator: " + cells[i]);
    }
    out += (i ? "," : "") + cells[i];
  }
  return out;
}

std::string angle_text(const std::optional<int>& a) { return a ? std::to_string(*a) : kNone; }

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += join(header) + "\n";
  for (const auto& r : rows) {
    if (r.size() != header.size()) throw std::runtime_error("csv row width differs from header");
    out += join(r) + "\n";
  }
  return out;
}

CsvTable CsvTable::parse(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      t.comments.push_back(line.substr(2));
      continue;
    }
    auto cells = split(line, ',');
    if (t.header.empty()) {
      t.header = std::move(cells);
    } else {
      if (cells.size() != t.header.size()) throw std::runtime_error("csv row width differs from header: " + line);
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw std::runtime_error("csv has no header");
  return t;
}

size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("csv column missing: " + name);
  return static_cast<size_t>(it - header.begin());
}

std::string CsvTable::comment_value(const std::string& key) const {
  const std::string prefix = key + ": ";
  for (const auto& c : comments) {
    if (c.rfind(prefix, 0) == 0) return c.substr(prefix.size());
  }
  return {};
}

std::string action_label(int action) {
  return std::string(scene::action_name(scene::action_from_index(action)));
}

int action_from_label(const std::string& label) { return scene::index_of(scene::parse_action(label)); }

CsvTable curves_table(const std::vector<std::pair<std::string, AccuracyCurve>>& labelled) {
  CsvTable t;
  t.header = {"action", "condition", "angle", "count", "correct", "accuracy"};
  for (const auto& [condition, curve] : labelled) {
    for (size_t k = 0; k < curve.angles.size(); ++k) {
      t.rows.push_back({action_label(curve.action), condition, std::to_string(curve.angles[k]),
                        std::to_string(curve.count[k]), std::to_string(curve.correct[k]),
                        format_double(curve.accuracy[k])});
    }
  }
  return t;
}

std::vector<std::pair<std::string, std::vector<AccuracyCurve>>> curves_from_table(const CsvTable& table) {
  const size_t c_action = table.column("action");
  const size_t c_condition = table.column("condition");
  const size_t c_angle = table.column("angle");
  const size_t c_count = table.column("count");
  const size_t c_correct = table.column("correct");
  const size_t c_accuracy = table.column("accuracy");
  std::vector<std::pair<std::string, std::vector<AccuracyCurve>>> out;
  for (const auto& row : table.rows) {
    auto group = std::find_if(out.begin(), out.end(), [&](const auto& g) { return g.first == row[c_condition]; });
    if (group == out.end()) {
      out.emplace_back(row[c_condition], std::vector<AccuracyCurve>{});
      group = std::prev(out.end());
    }
    const int action = action_from_label(row[c_action]);
    auto curve = std::find_if(group->second.begin(), group->second.end(),
                              [&](const AccuracyCurve& c) { return c.action == action; });
    if (curve == group->second.end()) {
      group->second.push_back(AccuracyCurve{action, {}, {}, {}, {}});
      curve = std::prev(group->second.end());
    }
    curve->angles.push_back(static_cast<int>(parse_int(row[c_angle])));
    curve->count.push_back(parse_int(row[c_count]));
    curve->correct.push_back(parse_int(row[c_correct]));
    curve->accuracy.push_back(parse_double(row[c_accuracy]));
  }
  return out;
}

CsvTable breakdown_table(const std::vector<std::pair<std::string, BreakdownResult>>& labelled) {
  CsvTable t;
  t.header = {"action", "condition", "positive_bp", "positive_trigger", "negative_bp", "negative_trigger", "mean_bp"};
  for (const auto& [condition, r] : labelled) {
    t.rows.push_back({action_label(r.action), condition, angle_text(r.positive.angle),
                      std::string(trigger_name(r.positive.trigger)), angle_text(r.negative.angle),
                      std::string(trigger_name(r.negative.trigger)),
                      r.mean_bp ? format_double(*r.mean_bp) : std::string(kNone)});
  }
  return t;
}

CsvTable condition_table(const std::vector<ConditionResult>& results) {
  CsvTable t;
  t.header = {"action", "attribute", "level", "total_drop", "samples"};
  for (const auto& r : results) {
    const long long samples = std::accumulate(r.curve.count.begin(), r.curve.count.end(), 0LL);
    t.rows.push_back({action_label(r.action), std::string(attribute_name(r.attribute)), format_double(r.level),
                      format_double(r.total_drop), std::to_string(samples)});
  }
  return t;
}

}  // namespace shiftlab::analysis
