// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "shiftlab/analysis/breakdown.hpp"
#include "shiftlab/classifier/split.hpp"
#include "shiftlab/classifier/train.hpp"
#include "shiftlab/mitigation/mitigation.hpp"
#include "shiftlab/scene/dataset.hpp"

namespace shiftlab::cli {

struct ExperimentConfig {
  uint64_t master_seed = 1;
  std::string output_dir = "experiment";
  scene::GenerationConfig corpus;  // corpus.shadow and corpus.master_seed are set from the fields here
  std::optional<scene::ShadowGrid> shadow = scene::ShadowGrid{};
  classifier::SplitSpec split;
  classifier::TrainConfig train;  // train.seed is derived from master_seed
  analysis::BreakdownCriteria criteria;
  mitigation::MitigationPlan mitigation;

  /// Copy with derived seeds filled in; throws ValidationError when invalid.
  ExperimentConfig resolved() const;

  /// Canonical JSON; output_dir is excluded from digests.
  nlohmann::ordered_json to_json() const;
  static ExperimentConfig from_json(const nlohmann::ordered_json& j);
  static ExperimentConfig load(const std::filesystem::path& path);

  uint64_t split_seed() const;
  uint64_t mitigation_seed() const;

  /// Digest of everything except output_dir.
  std::string digest() const;
  /// Digests of the inputs of each stage; downstream digests fold in upstream ones.
  std::string corpus_digest() const;
  std::string model_digest() const;
  std::string baseline_digest() const;
  std::string shadow_digest() const;
  std::string mitigation_digest(int angle) const;
  /// Keyed by the plan actually run, which may differ from `mitigation` via --angles.
  std::string mitigation_report_digest(const mitigation::MitigationPlan& plan) const;
};

}  // namespace shiftlab::cli
