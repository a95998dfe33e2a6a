// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "shiftlab/classifier/inputs.hpp"
#include "shiftlab/classifier/model.hpp"
#include "shiftlab/scene/dataset.hpp"

namespace shiftlab::classifier {

struct Prediction {
  std::string sample_path;
  int true_class = 0;
  int predicted_class = 0;
  std::array<float, kNumClasses> scores{};  // softmax probabilities

  bool operator==(const Prediction&) const = default;
};

/// Runs every model over the given manifest rows; each input is produced
/// once and shared. Result[m][i] belongs to models[m] and indices[i].
std::vector<std::vector<Prediction>> predict(const std::vector<const Model*>& models,
                                             const scene::DatasetManifest& manifest,
                                             const std::vector<size_t>& indices, const InputFn& inputs,
                                             unsigned workers = 1);

std::vector<Prediction> predict(const Model& model, const scene::DatasetManifest& manifest,
                                const std::vector<size_t>& indices, const InputFn& inputs, unsigned workers = 1);

/// JSON lines {sample_path, true_class, predicted_class, scores}.
std::string predictions_to_jsonl(const std::vector<Prediction>& predictions);
std::vector<Prediction> predictions_from_jsonl(const std::string& text);

struct CellCounts {
  long long correct = 0;
  long long count = 0;
  double accuracy() const { return count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0; }
};

/// Top-1 accuracy of one action over an angle grid.
struct AccuracyCurve {
  int action = 0;
  std::vector<int> angles;
  std::vector<double> accuracy;
  std::vector<long long> correct;
  std::vector<long long> count;

  /// Throws std::out_of_range for angles not on the curve.
  double at(int angle) const;
  bool has(int angle) const;
};

/// Builds a curve from per-angle tallies. Throws ValidationError listing
/// every grid angle without samples.
AccuracyCurve curve_from_counts(int action, const std::map<int, CellCounts>& by_angle,
                                const std::vector<int>& grid);

/// One curve per requested action from predictions joined to the manifest by
/// sample_path; rows with a shadow are skipped. Throws ValidationError listing
/// every absent (action, angle) pair.
std::vector<AccuracyCurve> evaluate_curves(const std::vector<Prediction>& predictions,
                                           const scene::DatasetManifest& manifest,
                                           const std::vector<int>& grid,
                                           const std::vector<int>& actions = {0, 1, 2, 3, 4});

/// Fraction of predictions whose arg-max equals the true class.
CellCounts top1(const std::vector<Prediction>& predictions);

}  // namespace shiftlab::classifier
