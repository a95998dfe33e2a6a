// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/classifier/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/common/format.hpp"
#include "shiftlab/common/parallel.hpp"

namespace shiftlab::classifier {

namespace {

constexpr size_t kChunk = 64;

std::array<float, kNumClasses> softmax(const float* logits) {
  std::array<float, kNumClasses> out{};
  const float top = *std::max_element(logits, logits + kNumClasses);
  double sum = 0;
  for (int k = 0; k < kNumClasses; ++k) sum += std::exp(static_cast<double>(logits[k] - top));
  for (int k = 0; k < kNumClasses; ++k) {
    out[k] = static_cast<float>(std::exp(static_cast<double>(logits[k] - top)) / sum);
  }
  return out;
}

}  // namespace

std::vector<std::vector<Prediction>> predict(const std::vector<const Model*>& models,
                                             const scene::DatasetManifest& manifest,
                                             const std::vector<size_t>& indices, const InputFn& inputs,
                                             unsigned workers) {
  std::vector<std::vector<Prediction>> out(models.size(), std::vector<Prediction>(indices.size()));
  if (models.empty() || indices.empty()) return out;
  const NetworkShape& shape = models.front()->network.shape();
  for (const Model* m : models) {
    if (m->network.shape() != shape) throw ValidationError("models", "all models must share one input shape");
    if (shape.num_classes != kNumClasses) throw ValidationError("models", "expected a 5-class network");
  }
  const size_t bytes = static_cast<size_t>(shape.input_size) * shape.input_size * 3;
  const size_t n_chunks = (indices.size() + kChunk - 1) / kChunk;
  parallel_for(n_chunks, workers, [&](size_t c) {
    const size_t begin = c * kChunk;
    const size_t n = std::min(kChunk, indices.size() - begin);
    std::vector<uint8_t> buffer(n * bytes);
    for (size_t i = 0; i < n; ++i) inputs(indices[begin + i], std::span<uint8_t>(buffer.data() + i * bytes, bytes));
    std::vector<float> logits(n * kNumClasses);
    for (size_t m = 0; m < models.size(); ++m) {
      models[m]->network.forward(buffer, n, logits);
      for (size_t i = 0; i < n; ++i) {
        const auto& row = manifest.rows.at(indices[begin + i]);
        const float* l = &logits[i * kNumClasses];
        Prediction& p = out[m][begin + i];
        p.sample_path = row.relative_path;
        p.true_class = row.class_id();
        p.predicted_class = static_cast<int>(std::max_element(l, l + kNumClasses) - l);
        p.scores = softmax(l);
      }
    }
  });
  return out;
}

std::vector<Prediction> predict(const Model& model, const scene::DatasetManifest& manifest,
                                const std::vector<size_t>& indices, const InputFn& inputs, unsigned workers) {
  return std::move(predict(std::vector<const Model*>{&model}, manifest, indices, inputs, workers).front());
}

std::string predictions_to_jsonl(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    nlohmann::ordered_json j;
    j["sample_path"] = p.sample_path;
    j["true_class"] = p.true_class;
    j["predicted_class"] = p.predicted_class;
    // Scores are written as shortest float text so they reload bit-exact.
    std::string scores = "[";
    for (int k = 0; k < kNumClasses; ++k) scores += (k ? "," : "") + format_float(p.scores[k]);
    scores += "]";
    std::string line = j.dump();
    line.pop_back();
    out += line + ",\"scores\":" + scores + "}\n";
  }
  return out;
}

std::vector<Prediction> predictions_from_jsonl(const std::string& text) {
  std::vector<Prediction> out;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Prediction p;
      p.sample_path = j.at("sample_path").get<std::string>();
      p.true_class = j.at("true_class").get<int>();
      p.predicted_class = j.at("predicted_class").get<int>();
      const auto& s = j.at("scores");
      if (!s.is_array() || s.size() != kNumClasses) throw std::runtime_error("scores must have 5 entries");
      for (int k = 0; k < kNumClasses; ++k) p.scores[k] = s[k].get<float>();
      out.push_back(std::move(p));
    } catch (const std::exception& e) {
      throw std::runtime_error("predictions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

double AccuracyCurve::at(int angle) const {
  const auto it = std::find(angles.begin(), angles.end(), angle);
  if (it == angles.end()) throw std::out_of_range("angle " + std::to_string(angle) + " not on curve");
  return accuracy[static_cast<size_t>(it - angles.begin())];
}

bool AccuracyCurve::has(int angle) const { return std::find(angles.begin(), angles.end(), angle) != angles.end(); }

namespace {

std::string join_missing(const std::vector<std::pair<int, int>>& cells) {
  std::string out;
  for (const auto& [action, angle] : cells) {
    out += (out.empty() ? "(" : ", (") + std::string(scene::action_name(scene::action_from_index(action))) + ", " +
           std::to_string(angle) + ")";
  }
  return out;
}

AccuracyCurve build_curve(int action, const std::map<int, CellCounts>& by_angle, const std::vector<int>& grid,
                          std::vector<std::pair<int, int>>& missing) {
  AccuracyCurve curve;
  curve.action = action;
  for (int angle : grid) {
    const auto it = by_angle.find(angle);
    if (it == by_angle.end() || it->second.count == 0) {
      missing.emplace_back(action, angle);
      continue;
    }
    curve.angles.push_back(angle);
    curve.accuracy.push_back(it->second.accuracy());
    curve.correct.push_back(it->second.correct);
    curve.count.push_back(it->second.count);
  }
  return curve;
}

}  // namespace

AccuracyCurve curve_from_counts(int action, const std::map<int, CellCounts>& by_angle, const std::vector<int>& grid) {
  std::vector<std::pair<int, int>> missing;
  AccuracyCurve curve = build_curve(action, by_angle, grid, missing);
  if (!missing.empty()) throw ValidationError("test_set", "missing angle coverage: " + join_missing(missing));
  return curve;
}

std::vector<AccuracyCurve> evaluate_curves(const std::vector<Prediction>& predictions,
                                           const scene::DatasetManifest& manifest, const std::vector<int>& grid,
                                           const std::vector<int>& actions) {
  std::unordered_map<std::string, const scene::ManifestRow*> by_path;
  by_path.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) by_path.emplace(row.relative_path, &row);
  std::map<int, std::map<int, CellCounts>> tally;
  for (const auto& p : predictions) {
    const auto it = by_path.find(p.sample_path);
    if (it == by_path.end()) throw ValidationError("predictions", "unknown sample " + p.sample_path);
    const auto& row = *it->second;
    if (row.shadow) continue;
    if (p.true_class != row.class_id()) throw ValidationError("predictions", "label mismatch for " + p.sample_path);
    auto& cell = tally[row.class_id()][row.angle_deg];
    ++cell.count;
    if (p.predicted_class == p.true_class) ++cell.correct;
  }
  std::vector<AccuracyCurve> curves;
  std::vector<std::pair<int, int>> missing;
  for (int a : actions) curves.push_back(build_curve(a, tally[a], grid, missing));
  if (!missing.empty()) throw ValidationError("test_set", "missing angle coverage: " + join_missing(missing));
  return curves;
}

CellCounts top1(const std::vector<Prediction>& predictions) {
  CellCounts c;
  for (const auto& p : predictions) {
    ++c.count;
    if (p.predicted_class == p.true_class) ++c.correct;
  }
  return c;
}

}  // namespace shiftlab::classifier
