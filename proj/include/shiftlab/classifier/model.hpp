// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "shiftlab/classifier/network.hpp"

namespace shiftlab::classifier {

/// A trained, immutable classifier plus the digests that identify how it
/// was produced. Safe to share read-only across threads.
struct Model {
  Network network{NetworkShape{}};
  std::string train_manifest_digest;
  std::string config_digest;
  nlohmann::ordered_json train_config;  // as trained, for the sidecar

  /// Digest of the weights; stable across save/load.
  std::string id() const;
};

/// Binary checkpoint: magic, shape, little-endian float32 parameters.
void save_checkpoint(const Model& model, const std::filesystem::path& path);

/// Writes {model_id, digests, train_config, shape, metrics, checkpoint_sha256}.
void save_sidecar(const Model& model, const std::filesystem::path& checkpoint, const std::filesystem::path& sidecar,
                  const nlohmann::ordered_json& metrics);

/// Reads the checkpoint and, when present, the digests from the sidecar.
Model load_model(const std::filesystem::path& checkpoint, const std::filesystem::path& sidecar = {});

}  // namespace shiftlab::classifier
