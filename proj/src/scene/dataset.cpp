// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/scene/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "shiftlab/common/digest.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/common/format.hpp"
#include "shiftlab/common/parallel.hpp"
#include "shiftlab/common/rng.hpp"
#include "shiftlab/scene/render.hpp"

namespace shiftlab::scene {

using nlohmann::ordered_json;

namespace {

std::vector<int> iota_vec(int lo, int hi_inclusive, int step = 1) {
  std::vector<int> v;
  for (int i = lo; i <= hi_inclusive; i += step) v.push_back(i);
  return v;
}

template <typename T>
void require_nonempty(const std::vector<T>& v, const char* field) {
  if (v.empty()) throw ValidationError(field, "attribute grid is empty");
}

template <typename T>
void require_unique(std::vector<T> v, const char* field) {
  std::sort(v.begin(), v.end());
  if (std::adjacent_find(v.begin(), v.end()) != v.end()) throw ValidationError(field, "duplicate level");
}

std::vector<ActionId> parse_actions(const ordered_json& j) {
  std::vector<ActionId> out;
  for (const auto& a : j) out.push_back(parse_action(a.get<std::string>()));
  return out;
}

ordered_json actions_json(const std::vector<ActionId>& actions) {
  ordered_json arr = ordered_json::array();
  for (ActionId a : actions) arr.push_back(std::string(action_name(a)));
  return arr;
}

std::string angle_tag(int angle) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%03d", angle < 0 ? 'm' : 'p', std::abs(angle));
  return buf;
}

std::string make_path(const ManifestRow& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s/%s/%s_%s_f%02d_s%d_b%d", r.shadow ? "shadow" : "pose",
                std::string(action_name(r.action)).c_str(), r.dual ? "d" : "n", angle_tag(r.angle_deg).c_str(),
                r.frame, r.skin_tone, r.background);
  std::string path = buf;
  if (r.shadow) {
    std::snprintf(buf, sizeof buf, "_w%d_a%03ld_t%d_r%d", r.shadow->width_level, std::lround(r.shadow->alpha * 100),
                  r.shadow->translation_id, r.shadow->rotation_id);
    path += buf;
  }
  return path + ".png";
}

}  // namespace

bool ShadowGrid::empty() const {
  return actions.empty() || width_levels.empty() || alphas.empty() || translation_ids.empty() ||
         rotation_ids.empty();
}

size_t ShadowGrid::conditions() const {
  return width_levels.size() * alphas.size() * translation_ids.size() * rotation_ids.size();
}

GenerationConfig GenerationConfig::resolved() const {
  GenerationConfig c = *this;
  if (c.actions.empty()) {
    for (const auto& a : kActions) c.actions.push_back(a.id);
  }
  if (c.angles.empty()) c.angles = angle_grid();
  if (c.frames.empty()) c.frames = iota_vec(0, kFramesPerCycle - 1);
  if (c.shadow && c.shadow->frames.empty()) c.shadow->frames = c.frames;
  c.validate();
  return c;
}

void GenerationConfig::validate() const {
  require_nonempty(actions, "actions");
  require_nonempty(angles, "angles");
  require_nonempty(frames, "frames");
  require_nonempty(skin_tones, "skin_tones");
  require_nonempty(backgrounds, "backgrounds");
  std::vector<int> action_ids;
  for (ActionId a : actions) action_ids.push_back(index_of(a));
  require_unique(action_ids, "actions");
  require_unique(angles, "angles");
  require_unique(frames, "frames");
  require_unique(skin_tones, "skin_tones");
  require_unique(backgrounds, "backgrounds");
  SceneSpec probe;
  probe.image_size = image_size;
  for (int a : angles) {
    probe.angle_deg = a;
    probe.validate();
  }
  probe.angle_deg = 0;
  for (int f : frames) {
    probe.frame = f;
    probe.validate();
  }
  probe.frame = 0;
  for (int s : skin_tones) {
    probe.skin_tone = s;
    probe.validate();
  }
  probe.skin_tone = 0;
  for (int b : backgrounds) {
    probe.background = b;
    probe.validate();
  }
  if (shadow && !shadow->empty()) {
    for (ActionId a : shadow->actions) {
      if (std::find(actions.begin(), actions.end(), a) == actions.end()) {
        throw ValidationError("shadow.actions", std::string(action_name(a)) + " is not in the pose grid");
      }
    }
    for (int f : shadow->frames) {
      if (std::find(frames.begin(), frames.end(), f) == frames.end()) {
        throw ValidationError("shadow.frames", "frame " + std::to_string(f) + " is not in the pose grid");
      }
    }
    require_unique(shadow->width_levels, "shadow.width_levels");
    require_unique(shadow->translation_ids, "shadow.translation_ids");
    require_unique(shadow->rotation_ids, "shadow.rotation_ids");
    std::set<long> alpha_tags;
    for (double a : shadow->alphas) {
      if (!alpha_tags.insert(std::lround(a * 100)).second) {
        throw ValidationError("shadow.alphas", "levels must differ at 0.01 resolution");
      }
    }
    for (int w : shadow->width_levels)
      for (double a : shadow->alphas)
        for (int t : shadow->translation_ids)
          for (int r : shadow->rotation_ids) ShadowConfig{w, a, t, r}.validate();
  }
}

void to_json(ordered_json& j, const ShadowGrid& g) {
  j = ordered_json{{"actions", actions_json(g.actions)},
                   {"width_levels", g.width_levels},
                   {"alphas", g.alphas},
                   {"translation_ids", g.translation_ids},
                   {"rotation_ids", g.rotation_ids},
                   {"frames", g.frames},
                   {"include_duals", g.include_duals}};
}

void from_json(const ordered_json& j, ShadowGrid& g) {
  g = ShadowGrid{};
  if (j.contains("actions")) g.actions = parse_actions(j.at("actions"));
  if (j.contains("width_levels")) g.width_levels = j.at("width_levels").get<std::vector<int>>();
  if (j.contains("alphas")) g.alphas = j.at("alphas").get<std::vector<double>>();
  if (j.contains("translation_ids")) g.translation_ids = j.at("translation_ids").get<std::vector<int>>();
  if (j.contains("rotation_ids")) g.rotation_ids = j.at("rotation_ids").get<std::vector<int>>();
  if (j.contains("frames")) g.frames = j.at("frames").get<std::vector<int>>();
  if (j.contains("include_duals")) g.include_duals = j.at("include_duals").get<bool>();
}

void to_json(ordered_json& j, const GenerationConfig& c) {
  j = ordered_json{{"actions", actions_json(c.actions)},
                   {"include_duals", c.include_duals},
                   {"angles", c.angles},
                   {"frames", c.frames},
                   {"skin_tones", c.skin_tones},
                   {"backgrounds", c.backgrounds},
                   {"image_size", c.image_size},
                   {"master_seed", c.master_seed}};
  j["shadow"] = c.shadow ? ordered_json(*c.shadow) : ordered_json(nullptr);
  j["write_shadow_images"] = c.write_shadow_images;
}

void from_json(const ordered_json& j, GenerationConfig& c) {
  c = GenerationConfig{};
  if (j.contains("actions")) c.actions = parse_actions(j.at("actions"));
  if (j.contains("include_duals")) c.include_duals = j.at("include_duals").get<bool>();
  if (j.contains("angles")) c.angles = j.at("angles").get<std::vector<int>>();
  if (j.contains("frames")) c.frames = j.at("frames").get<std::vector<int>>();
  if (j.contains("skin_tones")) c.skin_tones = j.at("skin_tones").get<std::vector<int>>();
  if (j.contains("backgrounds")) c.backgrounds = j.at("backgrounds").get<std::vector<int>>();
  if (j.contains("image_size")) c.image_size = j.at("image_size").get<int>();
  if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<uint64_t>();
  if (j.contains("shadow") && !j.at("shadow").is_null()) c.shadow = j.at("shadow").get<ShadowGrid>();
  if (j.contains("write_shadow_images")) c.write_shadow_images = j.at("write_shadow_images").get<bool>();
}

SceneSpec ManifestRow::scene_spec(int image_size) const {
  SceneSpec s;
  s.action = action;
  s.dual = dual;
  s.angle_deg = angle_deg;
  s.frame = frame;
  s.skin_tone = skin_tone;
  s.background = background;
  s.shadow = shadow;
  s.image_size = image_size;
  return s;
}

std::string ManifestRow::base_key() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%d|%d|%d|%d|%d|%d", class_id(), dual ? 1 : 0, angle_deg, frame, skin_tone,
                background);
  return buf;
}

ordered_json row_to_json(const ManifestRow& r) {
  ordered_json j;
  j["relative_path"] = r.relative_path;
  j["class_id"] = r.class_id();
  j["dual"] = r.dual;
  j["angle_deg"] = r.angle_deg;
  j["frame"] = r.frame;
  j["skin_tone"] = r.skin_tone;
  j["background"] = r.background;
  if (r.shadow) {
    j["shadow"] = ordered_json{{"width_level", r.shadow->width_level},
                               {"alpha", r.shadow->alpha},
                               {"translation_id", r.shadow->translation_id},
                               {"rotation_id", r.shadow->rotation_id}};
  } else {
    j["shadow"] = nullptr;
  }
  j["seed"] = r.seed;
  return j;
}

ManifestRow row_from_json(const ordered_json& j) {
  ManifestRow r;
  r.relative_path = j.at("relative_path").get<std::string>();
  r.action = action_from_index(j.at("class_id").get<int>());
  r.dual = j.at("dual").get<bool>();
  r.angle_deg = j.at("angle_deg").get<int>();
  r.frame = j.at("frame").get<int>();
  r.skin_tone = j.at("skin_tone").get<int>();
  r.background = j.at("background").get<int>();
  if (!j.at("shadow").is_null()) {
    const auto& s = j.at("shadow");
    r.shadow = ShadowConfig{s.at("width_level").get<int>(), s.at("alpha").get<double>(),
                            s.at("translation_id").get<int>(), s.at("rotation_id").get<int>()};
  }
  r.seed = j.at("seed").get<uint64_t>();
  return r;
}

std::string DatasetManifest::to_jsonl() const {
  std::string out;
  for (const auto& r : rows) {
    out += row_to_json(r).dump();
    out += '\n';
  }
  return out;
}

DatasetManifest DatasetManifest::from_jsonl(const std::string& text, int image_size) {
  DatasetManifest m;
  m.image_size = image_size;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      m.rows.push_back(row_from_json(ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest", "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

std::string DatasetManifest::digest() const { return sha256_hex(to_jsonl()); }

uint64_t derive_sample_seed(uint64_t master_seed, ActionId action, bool dual, int angle_deg, int frame,
                            int skin_tone, int background) {
  return mix_seed(master_seed, {index_of(action), dual ? 1 : 0, angle_deg, frame, skin_tone, background});
}

DatasetManifest enumerate_samples(const GenerationConfig& config) {
  const GenerationConfig c = config.resolved();
  DatasetManifest m;
  m.image_size = c.image_size;
  auto push = [&](ActionId a, bool dual, int angle, int frame, int skin, int bg, std::optional<ShadowConfig> sh) {
    ManifestRow r;
    r.action = a;
    r.dual = dual;
    r.angle_deg = angle;
    r.frame = frame;
    r.skin_tone = skin;
    r.background = bg;
    r.shadow = sh;
    r.seed = derive_sample_seed(c.master_seed, a, dual, angle, frame, skin, bg);
    r.relative_path = make_path(r);
    m.rows.push_back(std::move(r));
  };
  for (ActionId a : c.actions) {
    const int variants = (c.include_duals && action_class(a).has_dual_pose) ? 2 : 1;
    for (int d = 0; d < variants; ++d)
      for (int angle : c.angles)
        for (int frame : c.frames)
          for (int skin : c.skin_tones)
            for (int bg : c.backgrounds) push(a, d == 1, angle, frame, skin, bg, std::nullopt);
  }
  if (c.shadow && !c.shadow->empty()) {
    const ShadowGrid& g = *c.shadow;
    for (ActionId a : g.actions) {
      const int variants = (c.include_duals && g.include_duals && action_class(a).has_dual_pose) ? 2 : 1;
      for (int d = 0; d < variants; ++d)
        for (int angle : c.angles)
          for (int frame : g.frames)
            for (int skin : c.skin_tones)
              for (int bg : c.backgrounds)
                for (int w : g.width_levels)
                  for (double alpha : g.alphas)
                    for (int t : g.translation_ids)
                      for (int rot : g.rotation_ids) push(a, d == 1, angle, frame, skin, bg, ShadowConfig{w, alpha, t, rot});
    }
  }
  return m;
}

Image8 render_row(const ManifestRow& row, int image_size) {
  struct Cached {
    int size = 0;
    uint64_t seed = 0;
    std::string key;
    std::optional<RenderedSample> base;
  };
  thread_local Cached cache;
  const std::string key = row.base_key();
  if (!cache.base || cache.size != image_size || cache.seed != row.seed || cache.key != key) {
    ManifestRow base_row = row;
    base_row.shadow.reset();
    cache.base = render_scene(base_row.scene_spec(image_size), row.seed);
    cache.size = image_size;
    cache.seed = row.seed;
    cache.key = key;
  }
  if (!row.shadow) return quantize(cache.base->pixels);
  return quantize(apply_shadow(*cache.base, *row.shadow).pixels);
}

DatasetManifest generate_dataset(const GenerationConfig& config, const std::filesystem::path& out_dir,
                                 unsigned workers) {
  DatasetManifest m = enumerate_samples(config);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string() + ": " + ec.message());
  std::set<std::filesystem::path> dirs;
  for (const auto& r : m.rows) {
    if (!r.shadow || config.write_shadow_images) dirs.insert((out_dir / r.relative_path).parent_path());
  }
  for (const auto& d : dirs) {
    std::filesystem::create_directories(d, ec);
    if (ec) throw std::runtime_error("cannot create " + d.string() + ": " + ec.message());
  }
  parallel_for(m.rows.size(), workers, [&](size_t i) {
    const ManifestRow& r = m.rows[i];
    if (r.shadow && !config.write_shadow_images) return;
    write_png(out_dir / r.relative_path, render_row(r, m.image_size));
  });
  write_file_atomic((out_dir / "manifest.jsonl").string(), m.to_jsonl());
  return m;
}

}  // namespace shiftlab::scene
