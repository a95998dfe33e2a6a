// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/analysis/shadow.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

#include "shiftlab/common/error.hpp"
#include "shiftlab/common/format.hpp"

namespace shiftlab::analysis {

std::vector<Observation> join_predictions(const std::vector<classifier::Prediction>& predictions,
                                          const scene::DatasetManifest& manifest) {
  std::unordered_map<std::string, const scene::ManifestRow*> by_path;
  by_path.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) by_path.emplace(row.relative_path, &row);
  std::vector<Observation> out;
  out.reserve(predictions.size());
  for (const auto& p : predictions) {
    const auto it = by_path.find(p.sample_path);
    if (it == by_path.end()) throw ValidationError("predictions", "unknown sample " + p.sample_path);
    const auto& row = *it->second;
    out.push_back({row.class_id(), row.angle_deg, row.shadow, p.predicted_class == p.true_class});
  }
  return out;
}

std::string_view attribute_name(ShadowAttribute a) {
  switch (a) {
    case ShadowAttribute::kWidth: return "width_level";
    case ShadowAttribute::kAlpha: return "alpha";
    case ShadowAttribute::kTranslation: return "translation_id";
    case ShadowAttribute::kRotation: return "rotation_id";
  }
  return "";
}

ShadowAttribute parse_attribute(std::string_view name) {
  for (auto a : kShadowAttributes) {
    if (attribute_name(a) == name) return a;
  }
  throw ValidationError("attribute", "unknown shadow attribute '" + std::string(name) + "'");
}

double attribute_value(const scene::ShadowConfig& cfg, ShadowAttribute a) {
  switch (a) {
    case ShadowAttribute::kWidth: return cfg.width_level;
    case ShadowAttribute::kAlpha: return cfg.alpha;
    case ShadowAttribute::kTranslation: return cfg.translation_id;
    case ShadowAttribute::kRotation: return cfg.rotation_id;
  }
  return 0;
}

std::vector<double> attribute_levels(const scene::ShadowGrid& grid, ShadowAttribute a) {
  switch (a) {
    case ShadowAttribute::kWidth: return {grid.width_levels.begin(), grid.width_levels.end()};
    case ShadowAttribute::kAlpha: return grid.alphas;
    case ShadowAttribute::kTranslation: return {grid.translation_ids.begin(), grid.translation_ids.end()};
    case ShadowAttribute::kRotation: return {grid.rotation_ids.begin(), grid.rotation_ids.end()};
  }
  return {};
}

double total_accuracy_drop(const AccuracyCurve& condition, const AccuracyCurve& baseline) {
  if (condition.action != baseline.action) throw ValidationError("curves", "actions differ");
  if (condition.angles != baseline.angles || condition.angles.empty()) {
    throw ValidationError("curves", "angle grids differ");
  }
  double sum = 0;
  for (size_t k = 0; k < condition.angles.size(); ++k) sum += baseline.accuracy[k] - condition.accuracy[k];
  return sum / static_cast<double>(condition.angles.size());
}

ConditionResult marginalize(const std::vector<Observation>& observations, int action, ShadowAttribute attribute,
                            double level, const scene::ShadowGrid& grid, const std::vector<int>& angles,
                            const AccuracyCurve& baseline) {
  using Combo = std::array<double, 4>;
  std::map<int, classifier::CellCounts> by_angle;
  std::set<std::pair<Combo, int>> seen;
  for (const auto& o : observations) {
    if (o.action != action || !o.shadow || attribute_value(*o.shadow, attribute) != level) continue;
    auto& cell = by_angle[o.angle];
    ++cell.count;
    if (o.correct) ++cell.correct;
    Combo combo{};
    for (size_t i = 0; i < 4; ++i) combo[i] = attribute_value(*o.shadow, kShadowAttributes[i]);
    seen.emplace(combo, o.angle);
  }

  // Every combination of the non-fixed attributes must appear at every angle.
  std::vector<Combo> combos{Combo{}};
  for (size_t i = 0; i < 4; ++i) {
    const auto a = kShadowAttributes[i];
    const std::vector<double> levels = a == attribute ? std::vector<double>{level} : attribute_levels(grid, a);
    std::vector<Combo> next;
    for (const auto& c : combos) {
      for (double v : levels) {
        Combo n = c;
        n[i] = v;
        next.push_back(n);
      }
    }
    combos = std::move(next);
  }
  std::string missing;
  size_t n_missing = 0;
  for (const auto& c : combos) {
    for (int angle : angles) {
      if (seen.count({c, angle})) continue;
      if (++n_missing <= 20) {
        missing += (missing.empty() ? "" : ", ") + std::string("(w=") + format_double(c[0]) +
                   " a=" + format_double(c[1]) + " t=" + format_double(c[2]) + " r=" + format_double(c[3]) +
                   " angle=" + std::to_string(angle) + ")";
      }
    }
  }
  if (n_missing > 0) {
    throw ValidationError("predictions", std::to_string(n_missing) + " shadow cells missing for action " +
                                             std::to_string(action) + ": " + missing +
                                             (n_missing > 20 ? ", ..." : ""));
  }

  ConditionResult r;
  r.action = action;
  r.attribute = attribute;
  r.level = level;
  r.curve = classifier::curve_from_counts(action, by_angle, angles);
  r.total_drop = total_accuracy_drop(r.curve, baseline);
  return r;
}

AccuracyCurve pooled_shadow_curve(const std::vector<Observation>& observations, int action,
                                  const std::vector<int>& angles) {
  std::map<int, classifier::CellCounts> by_angle;
  for (const auto& o : observations) {
    if (o.action != action || !o.shadow) continue;
    auto& cell = by_angle[o.angle];
    ++cell.count;
    if (o.correct) ++cell.correct;
  }
  return classifier::curve_from_counts(action, by_angle, angles);
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (size_t i = 0; i < order.size();) {
    size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw ValidationError("spearman", "length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

std::optional<double> angle_accuracy_spearman(const AccuracyCurve& curve) {
  std::vector<double> x;
  for (int a : curve.angles) x.push_back(std::abs(a));
  return spearman(x, curve.accuracy);
}

}  // namespace shiftlab::analysis
