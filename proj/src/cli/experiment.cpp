// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/cli/experiment.hpp"

#include <algorithm>

#include "shiftlab/common/digest.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/common/format.hpp"
#include "shiftlab/common/rng.hpp"

namespace shiftlab::cli {

using nlohmann::ordered_json;

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig c = *this;
  c.corpus.master_seed = master_seed;
  c.corpus.shadow = shadow && !shadow->empty() ? shadow : std::nullopt;
  c.corpus = c.corpus.resolved();
  c.train.seed = mix_seed(master_seed, {0x7A});
  c.split.validate();
  c.train.validate();
  c.criteria.validate();
  c.mitigation.validate();
  if (output_dir.empty()) throw ValidationError("output_dir", "is empty");
  return c;
}

ordered_json ExperimentConfig::to_json() const {
  ordered_json corpus_json = corpus;
  corpus_json.erase("master_seed");
  corpus_json.erase("shadow");
  ordered_json train_json = train;
  train_json.erase("seed");
  return ordered_json{{"master_seed", master_seed},
                      {"output_dir", output_dir},
                      {"corpus", corpus_json},
                      {"shadow", shadow ? ordered_json(*shadow) : ordered_json(nullptr)},
                      {"split", split},
                      {"train", train_json},
                      {"criteria", criteria},
                      {"mitigation", mitigation}};
}

ExperimentConfig ExperimentConfig::from_json(const ordered_json& j) {
  if (!j.is_object()) throw ValidationError("config", "must be a JSON object");
  static const char* kKeys[] = {"master_seed", "output_dir", "corpus", "shadow",
                                "split",       "train",      "criteria", "mitigation"};
  for (const auto& item : j.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), item.key()) == std::end(kKeys)) {
      throw ValidationError(item.key(), "unknown configuration key");
    }
  }
  ExperimentConfig c;
  try {
    if (j.contains("master_seed")) c.master_seed = j.at("master_seed").get<uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("corpus")) c.corpus = j.at("corpus").get<scene::GenerationConfig>();
    if (j.contains("shadow")) {
      c.shadow = j.at("shadow").is_null() ? std::nullopt
                                          : std::optional<scene::ShadowGrid>(j.at("shadow").get<scene::ShadowGrid>());
    }
    if (j.contains("split")) c.split = j.at("split").get<classifier::SplitSpec>();
    if (j.contains("train")) c.train = j.at("train").get<classifier::TrainConfig>();
    if (j.contains("criteria")) c.criteria = j.at("criteria").get<analysis::BreakdownCriteria>();
    if (j.contains("mitigation")) c.mitigation = j.at("mitigation").get<mitigation::MitigationPlan>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config", e.what());
  }
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path.string());
  } catch (const std::exception& e) {
    throw ValidationError("config", e.what());
  }
  try {
    return from_json(ordered_json::parse(text));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
}

uint64_t ExperimentConfig::split_seed() const { return mix_seed(master_seed, {0x51}); }
uint64_t ExperimentConfig::mitigation_seed() const { return mix_seed(master_seed, {0x3D}); }

std::string ExperimentConfig::digest() const {
  ordered_json j = to_json();
  j.erase("output_dir");
  return sha256_hex(j.dump());
}

std::string ExperimentConfig::corpus_digest() const {
  ordered_json j = to_json();
  return sha256_hex("corpus\n" + std::to_string(master_seed) + "\n" + j.at("corpus").dump() + "\n" +
                    j.at("shadow").dump());
}

std::string ExperimentConfig::model_digest() const {
  const ordered_json j = to_json();
  return sha256_hex("model\n" + corpus_digest() + "\n" + j.at("split").dump() + "\n" + j.at("train").dump());
}

std::string ExperimentConfig::baseline_digest() const {
  const ordered_json j = to_json();
  return sha256_hex("baseline\n" + model_digest() + "\n" + j.at("criteria").dump());
}

std::string ExperimentConfig::shadow_digest() const { return sha256_hex("shadow\n" + baseline_digest()); }

std::string ExperimentConfig::mitigation_digest(int angle) const {
  return sha256_hex("mitigation\n" + model_digest() + "\n" + std::to_string(angle));
}

std::string ExperimentConfig::mitigation_report_digest(const mitigation::MitigationPlan& plan) const {
  // The report lists candidates by angle, so only the set of angles matters.
  mitigation::MitigationPlan canonical = plan;
  auto& a = canonical.candidate_angles;
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return sha256_hex("mitigation-report\n" + baseline_digest() + "\n" + ordered_json(canonical).dump());
}

}  // namespace shiftlab::cli
