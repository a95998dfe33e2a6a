// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shiftlab/analysis/breakdown.hpp"
#include "shiftlab/scene/dataset.hpp"

namespace shiftlab::analysis {

/// One prediction joined to its manifest attributes.
struct Observation {
  int action = 0;
  int angle = 0;
  std::optional<scene::ShadowConfig> shadow;
  bool correct = false;
};

/// Joins by sample_path. Throws ValidationError for unknown samples.
std::vector<Observation> join_predictions(const std::vector<classifier::Prediction>& predictions,
                                          const scene::DatasetManifest& manifest);

enum class ShadowAttribute { kWidth, kAlpha, kTranslation, kRotation };

inline constexpr ShadowAttribute kShadowAttributes[] = {ShadowAttribute::kWidth, ShadowAttribute::kAlpha,
                                                         ShadowAttribute::kTranslation, ShadowAttribute::kRotation};

std::string_view attribute_name(ShadowAttribute a);
ShadowAttribute parse_attribute(std::string_view name);
double attribute_value(const scene::ShadowConfig& cfg, ShadowAttribute a);
std::vector<double> attribute_levels(const scene::ShadowGrid& grid, ShadowAttribute a);

struct ConditionResult {
  int action = 0;
  ShadowAttribute attribute = ShadowAttribute::kAlpha;
  double level = 0;
  AccuracyCurve curve;  // pooled over every combination of the other attributes
  double total_drop = 0;
};

/// Mean over the shared grid of (baseline - condition). Throws
/// ValidationError when actions or grids differ.
double total_accuracy_drop(const AccuracyCurve& condition, const AccuracyCurve& baseline);

/// Pools shadow observations of `action` with attribute == level. Every
/// combination of the other attributes in `grid` must be present at every
/// angle of `angles`; otherwise ValidationError lists the absent cells.
ConditionResult marginalize(const std::vector<Observation>& observations, int action, ShadowAttribute attribute,
                            double level, const scene::ShadowGrid& grid, const std::vector<int>& angles,
                            const AccuracyCurve& baseline);

/// Per-angle accuracy over every shadow observation of `action`.
AccuracyCurve pooled_shadow_curve(const std::vector<Observation>& observations, int action,
                                  const std::vector<int>& angles);

/// Spearman rank correlation with average ranks for ties; nullopt when
/// either side is constant or fewer than two points are given.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Spearman between |angle| and accuracy over a curve.
std::optional<double> angle_accuracy_spearman(const AccuracyCurve& curve);

}  // namespace shiftlab::analysis
