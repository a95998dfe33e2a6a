// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftlab/common/image.hpp"
#include "shiftlab/scene/scene_spec.hpp"

namespace shiftlab::scene {

/// Shadow attribute levels rendered on top of a subset of the pose grid.
struct ShadowGrid {
  std::vector<ActionId> actions{ActionId::kRubBack, ActionId::kRubThumb};
  std::vector<int> width_levels{1, 2, 3};
  std::vector<double> alphas{0.2, 0.4, 0.6, 0.8};
  std::vector<int> translation_ids{1, 2};
  std::vector<int> rotation_ids{1, 2};
  std::vector<int> frames;     // empty means the pose grid's frames
  bool include_duals = false;  // shadows are rendered for one pose variant only

  bool empty() const;
  size_t conditions() const;
};

struct GenerationConfig {
  std::vector<ActionId> actions;  // empty means all five
  bool include_duals = true;
  std::vector<int> angles;  // empty means the full grid
  std::vector<int> frames;  // empty means 0..19
  std::vector<int> skin_tones{0, 1};
  std::vector<int> backgrounds{0, 1};
  int image_size = kDefaultImageSize;
  uint64_t master_seed = 1;
  std::optional<ShadowGrid> shadow;
  /// When false, shadow rows are listed in the manifest but not written as
  /// PNG; render_row reproduces their bytes exactly.
  bool write_shadow_images = true;

  /// Fills defaults and throws ValidationError on empty or invalid grids.
  GenerationConfig resolved() const;
  void validate() const;
};

void to_json(nlohmann::ordered_json& j, const ShadowGrid& g);
void from_json(const nlohmann::ordered_json& j, ShadowGrid& g);
void to_json(nlohmann::ordered_json& j, const GenerationConfig& c);
void from_json(const nlohmann::ordered_json& j, GenerationConfig& c);

struct ManifestRow {
  std::string relative_path;
  ActionId action = ActionId::kRubPalm;
  bool dual = false;
  int angle_deg = 0;
  int frame = 0;
  int skin_tone = 0;
  int background = 0;
  std::optional<ShadowConfig> shadow;
  uint64_t seed = 0;

  int class_id() const { return index_of(action); }
  SceneSpec scene_spec(int image_size) const;
  /// Identifies the shadow-free image a row is built on.
  std::string base_key() const;
  bool operator==(const ManifestRow&) const = default;
};

struct DatasetManifest {
  int image_size = kDefaultImageSize;
  std::vector<ManifestRow> rows;

  /// One JSON object per line, keys in a fixed order.
  std::string to_jsonl() const;
  static DatasetManifest from_jsonl(const std::string& text, int image_size);
  std::string digest() const;
};

nlohmann::ordered_json row_to_json(const ManifestRow& row);
ManifestRow row_from_json(const nlohmann::ordered_json& j);

/// Per-sample seed from the master seed and the shadow-free attribute tuple,
/// so a shadow row renders on exactly the image of its shadow-free twin.
uint64_t derive_sample_seed(uint64_t master_seed, ActionId action, bool dual, int angle_deg, int frame,
                            int skin_tone, int background);

/// The full Cartesian product of requested levels, in a fixed order.
DatasetManifest enumerate_samples(const GenerationConfig& config);

/// The quantized image of a manifest row. Each thread keeps its most recent
/// shadow-free render, so consecutive shadow rows over one base (the
/// manifest's innermost order) render the scene once.
Image8 render_row(const ManifestRow& row, int image_size);

/// Renders every sample as PNG under out_dir and writes out_dir/manifest.jsonl.
/// Rendering is spread over `workers` threads; the manifest is written once.
DatasetManifest generate_dataset(const GenerationConfig& config, const std::filesystem::path& out_dir,
                                 unsigned workers = 1);

}  // namespace shiftlab::scene
