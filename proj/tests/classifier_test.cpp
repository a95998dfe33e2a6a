// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>

#include "oracles.hpp"
#include "shiftlab/classifier/evaluate.hpp"
#include "shiftlab/classifier/inputs.hpp"
#include "shiftlab/classifier/model.hpp"
#include "shiftlab/classifier/network.hpp"
#include "shiftlab/classifier/split.hpp"
#include "shiftlab/classifier/train.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/common/rng.hpp"

namespace shiftlab::classifier {
namespace {

scene::DatasetManifest small_manifest(bool with_shadow = false, std::vector<int> angles = {}) {
  scene::GenerationConfig cfg;
  cfg.frames = {0, 5, 10, 15};
  cfg.skin_tones = {0, 1};
  cfg.backgrounds = {0};
  cfg.angles = std::move(angles);
  cfg.image_size = 32;
  if (with_shadow) {
    cfg.shadow = scene::ShadowGrid{};
    cfg.shadow->alphas = {0.4};
    cfg.shadow->width_levels = {1};
  }
  return scene::enumerate_samples(cfg.resolved());
}

TrainConfig tiny_config(int iterations) {
  TrainConfig cfg;
  cfg.iterations = iterations;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  cfg.seed = 5;
  cfg.network.input_size = 16;
  cfg.network.channels = {4, 8, 8};
  return cfg;
}

std::vector<TrainingExample> examples_for(const scene::DatasetManifest& m, const std::vector<size_t>& idx,
                                          int input_size) {
  const RenderImageSource source(m.image_size);
  const auto fn = inputs_from_source(source, m, input_size);
  std::vector<TrainingExample> out;
  for (size_t i : idx) {
    TrainingExample e{m.rows[i].relative_path, m.rows[i].class_id(),
                      std::vector<uint8_t>(static_cast<size_t>(input_size) * input_size * 3)};
    fn(i, e.pixels);
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------- network

double loss_of(const Network& net, const std::vector<uint8_t>& x, const std::vector<int>& y) {
  const size_t n = y.size();
  std::vector<float> logits(n * kNumClasses);
  net.forward(x, n, logits);
  double loss = 0;
  for (size_t i = 0; i < n; ++i) {
    const float* l = &logits[i * kNumClasses];
    const double m = *std::max_element(l, l + kNumClasses);
    double z = 0;
    for (int c = 0; c < kNumClasses; ++c) z += std::exp(l[c] - m);
    loss += std::log(z) + m - l[y[i]];
  }
  return loss / static_cast<double>(n);
}

TEST(NetworkTest, GradientMatchesFiniteDifferences) {
  // head_grid 4 is a plain flatten of the 4x4 map, 1 is global averaging.
  for (int grid : {1, 2, 4}) {
    NetworkShape shape;
    shape.input_size = 32;
    shape.channels = {3, 4, 5};
    shape.head_grid = grid;
    Network net(shape);
    net.initialize(17);
    Rng rng(3);
    const size_t n = 4;
    std::vector<uint8_t> x(n * 32 * 32 * 3);
    for (auto& v : x) v = static_cast<uint8_t>(rng.below(256));
    std::vector<int> y{0, 2, 4, 1};
    std::vector<float> grad(net.parameter_count(), 0.0F);
    net.accumulate_gradient(x, y, n, static_cast<double>(n), grad);

    int checked = 0;
    int agreed = 0;
    auto params = net.parameters();
    for (int k = 0; k < 60; ++k) {
      const size_t p = rng.below(params.size());
      const float keep = params[p];
      const float h = 2e-3F;
      params[p] = keep + h;
      const double up = loss_of(net, x, y);
      params[p] = keep - h;
      const double down = loss_of(net, x, y);
      params[p] = keep;
      const double numeric = (up - down) / (2.0 * h);
      ++checked;
      // ReLU and max-pool kinks can make a few probes disagree.
      if (std::abs(numeric - grad[p]) <= 2e-3 + 5e-2 * std::abs(numeric)) ++agreed;
    }
    EXPECT_GE(agreed, checked * 9 / 10) << "head_grid " << grid;
  }
}

TEST(NetworkTest, HeadGridMustDivideFinalMap) {
  NetworkShape shape;
  shape.head_grid = 3;
  EXPECT_THROW(Network{shape}, ValidationError);
  shape.head_grid = 4;
  EXPECT_EQ(Network(shape).parameter_count(), Network(NetworkShape{}).parameter_count() + 5 * 32 * 12);
}

// Exact repeatability holds for identical batches; across batch sizes the
// GEMM blocking may reorder sums, so only closeness is expected.
TEST(NetworkTest, ForwardIsDeterministic) {
  Network net(NetworkShape{});
  net.initialize(1);
  Rng rng(9);
  std::vector<uint8_t> x(3 * 32 * 32 * 3);
  for (auto& v : x) v = static_cast<uint8_t>(rng.below(256));
  std::vector<float> all(3 * kNumClasses);
  std::vector<float> one(kNumClasses);
  std::vector<float> again(3 * kNumClasses);
  net.forward(x, 3, all);
  net.forward(x, 3, again);
  EXPECT_EQ(all, again);
  net.forward(std::span<const uint8_t>(x).subspan(2 * 32 * 32 * 3), 1, one);
  for (int c = 0; c < kNumClasses; ++c) EXPECT_NEAR(one[c], all[2 * kNumClasses + c], 1e-4);
}

TEST(NetworkTest, RejectsBadShape) {
  NetworkShape s;
  s.input_size = 20;
  EXPECT_THROW(s.validate(), ValidationError);
}

// ---------------------------------------------------------------- split

TEST(SplitTest, PartitionAndCanonicalTrainRows) {
  const auto m = small_manifest(true);
  const auto split = split_canonical(m, SplitSpec{}, 42);
  std::vector<size_t> all = split.train;
  all.insert(all.end(), split.test.begin(), split.test.end());
  std::sort(all.begin(), all.end());
  std::vector<size_t> expected(m.rows.size());
  std::iota(expected.begin(), expected.end(), 0);
  EXPECT_EQ(all, expected);

  std::map<int, int> per_class;
  for (size_t i : split.train) {
    EXPECT_EQ(m.rows[i].angle_deg, 0);
    EXPECT_FALSE(m.rows[i].shadow.has_value());
    ++per_class[m.rows[i].class_id()];
  }
  // Interlaced has no dual, so 8 canonical rows; half of that for everyone.
  ASSERT_EQ(per_class.size(), 5U);
  for (const auto& [cls, n] : per_class) EXPECT_EQ(n, 4) << cls;
}

TEST(SplitTest, ArithmeticOnUniformClasses) {
  scene::DatasetManifest m;
  for (int c = 0; c < 5; ++c) {
    for (int k = 0; k < 400; ++k) {
      scene::ManifestRow r;
      r.action = scene::action_from_index(c);
      r.frame = k % 20;
      r.skin_tone = k / 20 % 10;
      r.background = k / 200;
      r.relative_path = "c" + std::to_string(c) + "/" + std::to_string(k);
      m.rows.push_back(r);
    }
  }
  SplitSpec spec;
  spec.stratify_by = {"skin_tone", "background", "frame"};
  const auto split = split_canonical(m, spec, 1);
  EXPECT_EQ(split.train.size(), 5U * 200);
  std::map<int, std::map<int, int>> by_bg;
  for (size_t i : split.train) ++by_bg[m.rows[i].class_id()][m.rows[i].background];
  for (const auto& [cls, counts] : by_bg) {
    EXPECT_EQ(counts.at(0), 100);
    EXPECT_EQ(counts.at(1), 100);
  }
}

TEST(SplitTest, PureFunctionOfManifestAndSeed) {
  const auto m = small_manifest();
  EXPECT_EQ(split_canonical(m, SplitSpec{}, 5).train, split_canonical(m, SplitSpec{}, 5).train);
  EXPECT_NE(split_canonical(m, SplitSpec{}, 5).train, split_canonical(m, SplitSpec{}, 6).train);
}

TEST(SplitTest, MissingCanonicalClassIsNamed) {
  auto m = small_manifest(false, {0, 10});
  std::erase_if(m.rows, [](const auto& r) { return r.action == scene::ActionId::kRubTips && r.angle_deg == 0; });
  try {
    split_canonical(m, SplitSpec{}, 1);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("rub_tips"), std::string::npos);
  }
}

TEST(SplitTest, RejectsBadSpec) {
  SplitSpec s;
  s.train_fraction = 1.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = {};
  s.stratify_by = {"frame", "frame"};
  EXPECT_THROW(s.validate(), ValidationError);
  s = {};
  s.stratify_by = {"colour"};
  EXPECT_THROW(s.validate(), ValidationError);
}

// ---------------------------------------------------------------- training

TEST(TrainTest, RejectsImbalance) {
  const auto m = small_manifest(false, {0});
  std::vector<size_t> idx;
  for (size_t i = 0; i < m.rows.size(); ++i) {
    if (m.rows[i].action == scene::ActionId::kRubBack) idx.push_back(i);
  }
  EXPECT_THROW(train(examples_for(m, idx, 16), tiny_config(5)), ValidationError);

  const auto split = split_canonical(m, SplitSpec{}, 1);
  auto ex = examples_for(m, split.train, 16);
  ex.pop_back();
  EXPECT_THROW(train(ex, tiny_config(5)), ValidationError);
  EXPECT_THROW(train({}, tiny_config(5)), ValidationError);
}

TEST(TrainTest, UntrainedModelIsNearChance) {
  const auto m = small_manifest(false, {0, 30, -30});
  std::vector<size_t> all(m.rows.size());
  std::iota(all.begin(), all.end(), 0);
  const auto split = split_canonical(m, SplitSpec{}, 1);
  const auto result = train(examples_for(m, split.train, 16), tiny_config(0));
  const RenderImageSource source(m.image_size);
  const auto preds = predict(result.model, m, all, inputs_from_source(source, m, 16));
  std::map<int, CellCounts> per_class;
  for (const auto& p : preds) {
    auto& c = per_class[p.true_class];
    ++c.count;
    c.correct += p.predicted_class == p.true_class;
  }
  double balanced = 0;
  for (const auto& [cls, c] : per_class) balanced += c.accuracy() / 5.0;
  EXPECT_NEAR(balanced, 0.2, 0.1);
  EXPECT_FALSE(result.converged);
}

TEST(TrainTest, OrderInvariantAndSeeded) {
  const auto m = small_manifest(false, {0});
  const auto split = split_canonical(m, SplitSpec{}, 2);
  auto ex = examples_for(m, split.train, 16);
  const auto a = train(ex, tiny_config(30));
  std::reverse(ex.begin(), ex.end());
  const auto b = train(ex, tiny_config(30));
  EXPECT_EQ(a.model.id(), b.model.id());
  auto other = tiny_config(30);
  other.seed = 6;
  EXPECT_NE(train(ex, other).model.id(), a.model.id());
}

TEST(TrainTest, LearnsCanonicalPoses) {
  const auto m = small_manifest(false, {0});
  const auto split = split_canonical(m, SplitSpec{}, 3);
  const auto result = train(examples_for(m, split.train, 16), tiny_config(150));
  EXPECT_TRUE(result.converged);
  EXPECT_GE(result.final_train_accuracy, 0.9);
}

TEST(ModelTest, ReloadReproducesPredictionsExactly) {
  const auto dir = std::filesystem::temp_directory_path() / "shiftlab_model_test";
  std::filesystem::create_directories(dir);
  const auto m = small_manifest(true, {0, 45});
  const auto split = split_canonical(m, SplitSpec{}, 3);
  auto model = train(examples_for(m, split.train, 16), tiny_config(40)).model;
  model.config_digest = "abc";
  save_checkpoint(model, dir / "m.bin");
  save_sidecar(model, dir / "m.bin", dir / "m.json", {{"note", "test"}});
  const auto loaded = load_model(dir / "m.bin", dir / "m.json");
  EXPECT_EQ(loaded.id(), model.id());
  EXPECT_EQ(loaded.config_digest, "abc");

  const RenderImageSource source(m.image_size);
  const auto fn = inputs_from_source(source, m, 16);
  const auto before = predict(model, m, split.test, fn);
  const auto after = predict(loaded, m, split.test, fn, 2);
  EXPECT_EQ(before, after);
  EXPECT_EQ(predictions_from_jsonl(predictions_to_jsonl(before)), before);

  std::filesystem::resize_file(dir / "m.bin", 100);
  EXPECT_THROW(load_model(dir / "m.bin"), std::exception);
  std::filesystem::remove_all(dir);
}

// ---------------------------------------------------------------- curves

TEST(CurveTest, MatchesIndependentTally) {
  const auto m = small_manifest();
  Rng rng(12);
  std::vector<Prediction> preds;
  std::vector<std::tuple<int, int, bool>> raw;
  for (const auto& r : m.rows) {
    Prediction p;
    p.sample_path = r.relative_path;
    p.true_class = r.class_id();
    p.predicted_class = rng.below(3) == 0 ? static_cast<int>(rng.below(5)) : r.class_id();
    preds.push_back(p);
    raw.emplace_back(r.class_id(), r.angle_deg, p.predicted_class == p.true_class);
  }
  const auto curves = evaluate_curves(preds, m, scene::angle_grid());
  const auto expected = testing::tally(raw);
  ASSERT_EQ(curves.size(), 5U);
  for (const auto& c : curves) {
    ASSERT_EQ(c.angles, scene::angle_grid());
    for (size_t k = 0; k < c.angles.size(); ++k) {
      const auto& cell = expected.at({c.action, c.angles[k]});
      EXPECT_EQ(c.correct[k], cell.first);
      EXPECT_EQ(c.count[k], cell.second);
      EXPECT_EQ(c.accuracy[k], static_cast<double>(cell.first) / static_cast<double>(cell.second));
    }
  }
}

TEST(CurveTest, DegeneratePredictors) {
  const auto m = small_manifest();
  std::vector<Prediction> perfect;
  std::vector<Prediction> constant;
  for (const auto& r : m.rows) {
    perfect.push_back({r.relative_path, r.class_id(), r.class_id(), {}});
    constant.push_back({r.relative_path, r.class_id(), 2, {}});
  }
  for (const auto& c : evaluate_curves(perfect, m, scene::angle_grid())) {
    for (double a : c.accuracy) EXPECT_EQ(a, 1.0);
  }
  for (const auto& c : evaluate_curves(constant, m, scene::angle_grid())) {
    for (double a : c.accuracy) EXPECT_EQ(a, c.action == 2 ? 1.0 : 0.0);
  }
}

TEST(CurveTest, MissingCoverageListsCells) {
  const auto m = small_manifest();
  std::vector<Prediction> preds;
  for (const auto& r : m.rows) {
    if (r.action == scene::ActionId::kRubThumb && r.angle_deg == 35) continue;
    if (r.action == scene::ActionId::kRubPalm && r.angle_deg == -90) continue;
    preds.push_back({r.relative_path, r.class_id(), r.class_id(), {}});
  }
  try {
    evaluate_curves(preds, m, scene::angle_grid());
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("(rub_thumb, 35)"), std::string::npos) << what;
    EXPECT_NE(what.find("(rub_palm, -90)"), std::string::npos) << what;
  }
}

}  // namespace
}  // namespace shiftlab::classifier
