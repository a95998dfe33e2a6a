// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/classifier/train.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <numeric>

#include "shiftlab/common/digest.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/common/parallel.hpp"
#include "shiftlab/common/rng.hpp"

namespace shiftlab::classifier {

namespace {

constexpr size_t kChunk = 32;
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEpsilon = 1e-8;
constexpr double kFinalLrFraction = 0.1;

std::string line(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (iterations < 0) throw ValidationError("train.iterations", "must be non-negative");
  if (batch_size <= 0) throw ValidationError("train.batch_size", "must be positive");
  if (!(learning_rate > 0)) throw ValidationError("train.learning_rate", "must be positive");
  if (!class_balance) throw ValidationError("train.class_balance", "must be true");
  network.validate();
}

std::string TrainConfig::digest() const {
  nlohmann::ordered_json j = *this;
  return sha256_hex(j.dump());
}

void to_json(nlohmann::ordered_json& j, const TrainConfig& c) {
  j = nlohmann::ordered_json{{"iterations", c.iterations},
                             {"batch_size", c.batch_size},
                             {"learning_rate", c.learning_rate},
                             {"optimizer", "adam"},
                             {"seed", c.seed},
                             {"class_balance", c.class_balance},
                             {"input_size", c.network.input_size},
                             {"channels", c.network.channels},
                             {"head_grid", c.network.head_grid}};
}

void from_json(const nlohmann::ordered_json& j, TrainConfig& c) {
  c = TrainConfig{};
  if (j.contains("iterations")) c.iterations = j.at("iterations").get<int>();
  if (j.contains("batch_size")) c.batch_size = j.at("batch_size").get<int>();
  if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
  if (j.contains("optimizer") && j.at("optimizer").get<std::string>() != "adam") {
    throw ValidationError("train.optimizer", "only adam is supported");
  }
  if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
  if (j.contains("class_balance")) c.class_balance = j.at("class_balance").get<bool>();
  if (j.contains("input_size")) c.network.input_size = j.at("input_size").get<int>();
  if (j.contains("channels")) c.network.channels = j.at("channels").get<std::array<int, 3>>();
  if (j.contains("head_grid")) c.network.head_grid = j.at("head_grid").get<int>();
}

std::string training_set_digest(const std::vector<TrainingExample>& examples) {
  std::vector<std::pair<std::string, int>> keys;
  keys.reserve(examples.size());
  for (const auto& e : examples) keys.emplace_back(e.key, e.label);
  std::sort(keys.begin(), keys.end());
  Sha256 h;
  for (const auto& [k, l] : keys) {
    h.update(k);
    h.update("\t" + std::to_string(l) + "\n");
  }
  return h.hex();
}

TrainResult train(std::vector<TrainingExample> examples, const TrainConfig& config, unsigned workers) {
  config.validate();
  const NetworkShape& shape = config.network;
  if (examples.empty()) throw ValidationError("train_set", "is empty");
  const size_t input_bytes = static_cast<size_t>(shape.input_size) * shape.input_size * 3;
  std::map<int, size_t> per_class;
  for (const auto& e : examples) {
    if (e.label < 0 || e.label >= shape.num_classes) throw ValidationError("train_set", "label out of range");
    if (e.pixels.size() != input_bytes) throw ValidationError("train_set", "input size does not match network");
    ++per_class[e.label];
  }
  if (static_cast<int>(per_class.size()) != shape.num_classes) {
    throw ValidationError("train_set", "class balance violated: " + std::to_string(per_class.size()) + " of " +
                                           std::to_string(shape.num_classes) + " classes present");
  }
  for (const auto& [label, count] : per_class) {
    if (count != per_class.begin()->second) {
      throw ValidationError("train_set", "class balance violated: class " + std::to_string(label) + " has " +
                                             std::to_string(count) + " rows, class " +
                                             std::to_string(per_class.begin()->first) + " has " +
                                             std::to_string(per_class.begin()->second));
    }
  }
  std::sort(examples.begin(), examples.end(),
            [](const TrainingExample& a, const TrainingExample& b) { return a.key < b.key; });

  TrainResult result;
  Model& model = result.model;
  model.network = Network(shape);
  model.network.initialize(mix_seed(config.seed, {0x1D}));
  model.train_manifest_digest = training_set_digest(examples);
  model.config_digest = config.digest();
  model.train_config = config;

  const size_t n_params = model.network.parameter_count();
  std::vector<double> m1(n_params, 0.0);
  std::vector<double> m2(n_params, 0.0);
  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng sampler(mix_seed(config.seed, {0x5A}));
  sampler.shuffle(std::span<size_t>(order));
  size_t cursor = 0;

  const auto batch = static_cast<size_t>(config.batch_size);
  const size_t n_chunks = (batch + kChunk - 1) / kChunk;
  std::vector<std::vector<float>> chunk_grads(n_chunks, std::vector<float>(n_params));
  std::vector<Network::BatchStats> chunk_stats(n_chunks);
  std::vector<size_t> picked(batch);
  std::vector<float> grad(n_params);
  double window_loss = 0;
  size_t window_correct = 0;
  size_t window_seen = 0;

  for (int it = 0; it < config.iterations; ++it) {
    for (size_t i = 0; i < batch; ++i) {
      if (cursor == order.size()) {
        sampler.shuffle(std::span<size_t>(order));
        cursor = 0;
      }
      picked[i] = order[cursor++];
    }
    parallel_for(n_chunks, workers, [&](size_t c) {
      const size_t begin = c * kChunk;
      const size_t n = std::min(kChunk, batch - begin);
      std::vector<uint8_t> inputs(n * input_bytes);
      std::vector<int> labels(n);
      for (size_t i = 0; i < n; ++i) {
        const auto& e = examples[picked[begin + i]];
        std::copy(e.pixels.begin(), e.pixels.end(), inputs.begin() + static_cast<std::ptrdiff_t>(i * input_bytes));
        labels[i] = e.label;
      }
      std::fill(chunk_grads[c].begin(), chunk_grads[c].end(), 0.0F);
      chunk_stats[c] = model.network.accumulate_gradient(inputs, labels, n, static_cast<double>(batch), chunk_grads[c]);
    });
    std::fill(grad.begin(), grad.end(), 0.0F);
    for (size_t c = 0; c < n_chunks; ++c) {
      for (size_t p = 0; p < n_params; ++p) grad[p] += chunk_grads[c][p];
      window_loss += chunk_stats[c].loss_sum;
      window_correct += static_cast<size_t>(chunk_stats[c].correct);
    }
    window_seen += batch;

    const double progress = config.iterations > 1 ? static_cast<double>(it) / (config.iterations - 1) : 1.0;
    const double lr = config.learning_rate *
                      (kFinalLrFraction + (1 - kFinalLrFraction) * 0.5 * (1 + std::cos(std::numbers::pi * progress)));
    const double t = it + 1;
    const double c1 = 1.0 - std::pow(kBeta1, t);
    const double c2 = 1.0 - std::pow(kBeta2, t);
    auto params = model.network.parameters();
    for (size_t p = 0; p < n_params; ++p) {
      const double g = grad[p];
      m1[p] = kBeta1 * m1[p] + (1 - kBeta1) * g;
      m2[p] = kBeta2 * m2[p] + (1 - kBeta2) * g * g;
      params[p] -= static_cast<float>(lr * (m1[p] / c1) / (std::sqrt(m2[p] / c2) + kEpsilon));
    }
    if ((it + 1) % 100 == 0 || it + 1 == config.iterations) {
      result.log.push_back(line("iter %d loss %.4f train_acc %.4f lr %.2e", it + 1,
                                window_loss / static_cast<double>(window_seen),
                                static_cast<double>(window_correct) / static_cast<double>(window_seen), lr));
      window_loss = 0;
      window_correct = 0;
      window_seen = 0;
    }
  }

  size_t correct = 0;
  std::vector<float> logits(static_cast<size_t>(kChunk) * shape.num_classes);
  std::vector<uint8_t> inputs(kChunk * input_bytes);
  for (size_t begin = 0; begin < examples.size(); begin += kChunk) {
    const size_t n = std::min(kChunk, examples.size() - begin);
    for (size_t i = 0; i < n; ++i) {
      std::copy(examples[begin + i].pixels.begin(), examples[begin + i].pixels.end(),
                inputs.begin() + static_cast<std::ptrdiff_t>(i * input_bytes));
    }
    model.network.forward(std::span<const uint8_t>(inputs.data(), n * input_bytes), n, logits);
    for (size_t i = 0; i < n; ++i) {
      const float* row = &logits[i * shape.num_classes];
      const auto best = std::max_element(row, row + shape.num_classes) - row;
      if (best == examples[begin + i].label) ++correct;
    }
  }
  result.final_train_accuracy = static_cast<double>(correct) / static_cast<double>(examples.size());
  result.log.push_back(line("final train accuracy %.4f over %zu examples", result.final_train_accuracy,
                            examples.size()));
  if (result.final_train_accuracy < 0.5) {
    result.converged = false;
    result.log.push_back(line("warning: training did not converge (train accuracy %.4f < 0.5)",
                              result.final_train_accuracy));
  }
  return result;
}

}  // namespace shiftlab::classifier
