// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftlab/scene/dataset.hpp"

namespace shiftlab::classifier {

struct SplitSpec {
  double train_fraction = 0.5;
  /// Attributes balanced inside each class, outermost first. Allowed:
  /// dual, frame, skin_tone, background.
  std::vector<std::string> stratify_by{"dual", "skin_tone", "background", "frame"};

  void validate() const;
};

void to_json(nlohmann::ordered_json& j, const SplitSpec& s);
void from_json(const nlohmann::ordered_json& j, SplitSpec& s);

/// Manifest row indices, each list ascending.
struct Split {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

/// Train: floor(train_fraction * smallest per-class count of 0-degree
/// shadow-free rows) rows per class, chosen by a seeded nested round-robin
/// over `stratify_by`. Test: every other row, shadow rows included.
Split split_canonical(const scene::DatasetManifest& manifest, const SplitSpec& spec, uint64_t seed);

/// The per-class training rows chosen by split_canonical, in selection order.
/// Selection order is what lets mitigation take a fixed-size prefix at +x/-x.
std::vector<size_t> stratified_pick(const scene::DatasetManifest& manifest, const std::vector<size_t>& pool,
                                    const std::vector<std::string>& stratify_by, uint64_t seed);

}  // namespace shiftlab::classifier
