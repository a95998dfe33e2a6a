// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/classifier/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "shiftlab/common/error.hpp"
#include "shiftlab/common/rng.hpp"

namespace shiftlab::classifier {

namespace {

int attribute(const scene::ManifestRow& row, const std::string& name) {
  if (name == "dual") return row.dual ? 1 : 0;
  if (name == "frame") return row.frame;
  if (name == "skin_tone") return row.skin_tone;
  if (name == "background") return row.background;
  throw ValidationError("split.stratify_by", "unknown attribute '" + name + "'");
}

// Groups by the first attribute, orders each group recursively, then deals
// the groups out one row at a time in a shuffled group order.
std::vector<size_t> nested_round_robin(const scene::DatasetManifest& manifest, std::vector<size_t> rows,
                                       const std::vector<std::string>& attrs, size_t depth, Rng& rng) {
  if (depth == attrs.size()) {
    rng.shuffle(std::span<size_t>(rows));
    return rows;
  }
  std::map<int, std::vector<size_t>> groups;
  for (size_t r : rows) groups[attribute(manifest.rows[r], attrs[depth])].push_back(r);
  std::vector<std::vector<size_t>> ordered;
  for (auto& [level, members] : groups) ordered.push_back(nested_round_robin(manifest, members, attrs, depth + 1, rng));
  std::vector<size_t> perm(ordered.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  rng.shuffle(std::span<size_t>(perm));
  std::vector<size_t> out;
  out.reserve(rows.size());
  for (size_t k = 0; out.size() < rows.size(); ++k) {
    for (size_t g : perm) {
      if (k < ordered[g].size()) out.push_back(ordered[g][k]);
    }
  }
  return out;
}

}  // namespace

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("split.train_fraction", "must lie in (0, 1)");
  }
  std::set<std::string> seen;
  for (const auto& a : stratify_by) {
    if (a != "dual" && a != "frame" && a != "skin_tone" && a != "background") {
      throw ValidationError("split.stratify_by", "unknown attribute '" + a + "'");
    }
    if (!seen.insert(a).second) throw ValidationError("split.stratify_by", "duplicate attribute '" + a + "'");
  }
}

void to_json(nlohmann::ordered_json& j, const SplitSpec& s) {
  j = nlohmann::ordered_json{{"train_fraction", s.train_fraction}, {"stratify_by", s.stratify_by}};
}

void from_json(const nlohmann::ordered_json& j, SplitSpec& s) {
  s = SplitSpec{};
  if (j.contains("train_fraction")) s.train_fraction = j.at("train_fraction").get<double>();
  if (j.contains("stratify_by")) s.stratify_by = j.at("stratify_by").get<std::vector<std::string>>();
}

std::vector<size_t> stratified_pick(const scene::DatasetManifest& manifest, const std::vector<size_t>& pool,
                                    const std::vector<std::string>& stratify_by, uint64_t seed) {
  std::vector<size_t> sorted = pool;
  std::sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
    return manifest.rows[a].relative_path < manifest.rows[b].relative_path;
  });
  Rng rng(seed);
  return nested_round_robin(manifest, sorted, stratify_by, 0, rng);
}

Split split_canonical(const scene::DatasetManifest& manifest, const SplitSpec& spec, uint64_t seed) {
  spec.validate();
  std::map<int, std::vector<size_t>> canonical;
  for (size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    if (row.angle_deg == 0 && !row.shadow) canonical[row.class_id()].push_back(i);
  }
  std::vector<std::string> missing;
  for (const auto& a : scene::kActions) {
    if (!canonical.count(index_of(a.id))) missing.push_back(std::string(a.name));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ValidationError("manifest", "no 0-degree shadow-free rows for: " + list);
  }
  size_t smallest = SIZE_MAX;
  for (const auto& [c, rows] : canonical) smallest = std::min(smallest, rows.size());
  const auto per_class = static_cast<size_t>(std::floor(spec.train_fraction * static_cast<double>(smallest)));
  if (per_class == 0) throw ValidationError("split.train_fraction", "selects no training rows");

  std::vector<uint8_t> is_train(manifest.rows.size(), 0);
  for (const auto& [c, rows] : canonical) {
    const auto order = stratified_pick(manifest, rows, spec.stratify_by, mix_seed(seed, {0x5B, c}));
    for (size_t k = 0; k < per_class; ++k) is_train[order[k]] = 1;
  }
  Split split;
  for (size_t i = 0; i < manifest.rows.size(); ++i) (is_train[i] ? split.train : split.test).push_back(i);
  return split;
}

}  // namespace shiftlab::classifier
