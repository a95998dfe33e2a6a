// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftlab/classifier/model.hpp"

namespace shiftlab::classifier {

struct TrainConfig {
  int iterations = 1200;
  int batch_size = 128;
  double learning_rate = 2e-3;  // Adam, cosine-decayed to 10% over the run
  uint64_t seed = 0;
  bool class_balance = true;
  NetworkShape network;

  void validate() const;
  std::string digest() const;
};

void to_json(nlohmann::ordered_json& j, const TrainConfig& c);
void from_json(const nlohmann::ordered_json& j, TrainConfig& c);

/// One classifier input at network resolution.
struct TrainingExample {
  std::string key;  // manifest relative_path; fixes the sampling order
  int label = 0;
  std::vector<uint8_t> pixels;
};

struct TrainResult {
  Model model;
  double final_train_accuracy = 0;
  std::vector<std::string> log;  // progress lines plus any warnings
  bool converged = true;
};

/// Trains from scratch. Examples are sorted by key before sampling, so the
/// result does not depend on input order. Gradients are computed in fixed
/// chunks and reduced in chunk order, so `workers` never changes the weights.
///
/// Throws ValidationError when the set is empty or not class-balanced.
TrainResult train(std::vector<TrainingExample> examples, const TrainConfig& config, unsigned workers = 1);

/// Digest over sorted (key, label) pairs.
std::string training_set_digest(const std::vector<TrainingExample>& examples);

}  // namespace shiftlab::classifier
