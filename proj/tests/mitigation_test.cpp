// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "shiftlab/common/error.hpp"
#include "shiftlab/mitigation/mitigation.hpp"

namespace shiftlab::mitigation {
namespace {

struct Fixture {
  scene::DatasetManifest manifest;
  classifier::SplitSpec spec;
  classifier::Split split;
};

Fixture make_fixture() {
  Fixture f;
  scene::GenerationConfig cfg;
  cfg.frames = {0, 4, 8, 12, 16};
  cfg.skin_tones = {0, 1};
  cfg.backgrounds = {0};
  cfg.shadow = scene::ShadowGrid{};
  cfg.shadow->alphas = {0.8};
  cfg.shadow->width_levels = {2};
  f.manifest = scene::enumerate_samples(cfg.resolved());
  f.split = classifier::split_canonical(f.manifest, f.spec, 99);
  return f;
}

/// Curves where every cell has `count` samples and accuracy `value(action, angle)`.
template <typename Fn>
std::vector<AccuracyCurve> synthetic_curves(Fn value) {
  std::vector<AccuracyCurve> out;
  for (int a = 0; a < 5; ++a) {
    AccuracyCurve c;
    c.action = a;
    c.angles = scene::angle_grid();
    for (int angle : c.angles) {
      const double v = value(a, angle);
      c.accuracy.push_back(v);
      c.count.push_back(100);
      c.correct.push_back(static_cast<long long>(v * 100));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<AccuracyCurve> bell(double width) {
  return synthetic_curves([&](int, int angle) { return std::max(0.0, 1.0 - std::abs(angle) / width); });
}

TEST(TrainsetTest, EqualCountsAndFixedCanonicalPart) {
  const auto f = make_fixture();
  std::set<size_t> baseline_train(f.split.train.begin(), f.split.train.end());
  for (int x : {10, 45, 90}) {
    const auto set = build_mitigation_trainset(f.manifest, f.split, f.spec, x, 7);
    EXPECT_EQ(set.angle, x);
    ASSERT_EQ(set.train.size(), 3 * f.split.train.size());
    EXPECT_TRUE(std::equal(f.split.train.begin(), f.split.train.end(), set.train.begin()));
    std::map<std::pair<int, int>, int> cells;
    for (size_t i : set.train) {
      const auto& r = f.manifest.rows[i];
      EXPECT_FALSE(r.shadow.has_value());
      ++cells[{r.class_id(), r.angle_deg}];
    }
    for (int c = 0; c < 5; ++c) {
      const int canonical = cells[std::make_pair(c, 0)];
      EXPECT_GT(canonical, 0);
      EXPECT_EQ(canonical, cells[std::make_pair(c, x)]);
      EXPECT_EQ(canonical, cells[std::make_pair(c, -x)]);
    }
    std::set<size_t> train(set.train.begin(), set.train.end());
    EXPECT_EQ(train.size(), set.train.size());
    for (size_t i : set.test) {
      EXPECT_FALSE(train.count(i));
      EXPECT_FALSE(f.manifest.rows[i].shadow.has_value());
    }
    // Test pool = baseline shadow-free test rows minus the consumed +-x rows.
    size_t expected = 0;
    for (size_t i : f.split.test) expected += f.manifest.rows[i].shadow ? 0 : 1;
    EXPECT_EQ(set.test.size(), expected - 2 * f.split.train.size());
  }
}

TEST(TrainsetTest, RejectsZeroAndInsufficientCells) {
  const auto f = make_fixture();
  EXPECT_THROW(build_mitigation_trainset(f.manifest, f.split, f.spec, 0, 1), ValidationError);
  auto thin = f.manifest;
  std::erase_if(thin.rows, [](const auto& r) {
    return r.action == scene::ActionId::kRubTips && r.angle_deg == -40 && r.frame != 0;
  });
  const auto split = classifier::split_canonical(thin, f.spec, 99);
  try {
    build_mitigation_trainset(thin, split, f.spec, 40, 1);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("rub_tips"), std::string::npos) << what;
    EXPECT_NE(what.find("-40"), std::string::npos) << what;
  }
}

TEST(PlanTest, CandidatesAreNormalized) {
  std::vector<std::string> warnings;
  EXPECT_EQ(normalize_candidates({60, 50, 60, 55}, warnings), (std::vector<int>{60, 50, 55}));
  EXPECT_EQ(warnings.size(), 1U);
  EXPECT_THROW(normalize_candidates({0, 50}, warnings), ValidationError);
  MitigationPlan p;
  EXPECT_EQ(p.candidate_angles.size(), 18U);
  p.candidate_angles = {7};
  EXPECT_THROW(p.validate(), ValidationError);
  p.candidate_angles = {95};
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(ScoreTest, BaselineAsCandidateGivesZeroDeltas) {
  const auto base = bell(40);
  const auto r = score_candidate(50, base, base, {}, 1.0);
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.delta_top1, 0.0);
  ASSERT_TRUE(r.delta_breakdown.has_value());
  EXPECT_EQ(*r.delta_breakdown, 0.0);
  EXPECT_EQ(r.score, 0.0);
  EXPECT_EQ(r.excluded_actions, 0);
}

TEST(ScoreTest, DeltasAndPairwiseExclusion) {
  const auto base = bell(40);
  // Wider bell: breakdowns move outward, accuracy rises everywhere off-axis.
  auto better = bell(80);
  const auto r = score_candidate(50, better, base, {}, 1.0);
  EXPECT_GT(r.delta_top1, 0.0);
  ASSERT_TRUE(r.delta_breakdown.has_value());
  EXPECT_GT(*r.delta_breakdown, 0.0);
  EXPECT_DOUBLE_EQ(r.score, r.delta_top1 + *r.delta_breakdown / 90.0);

  // A perfect curve for one action censors both of its directions.
  better[2] = synthetic_curves([](int, int) { return 1.0; })[2];
  const auto censored = score_candidate(50, better, base, {}, 1.0);
  EXPECT_EQ(censored.excluded_actions, 1);
}

TEST(BestRangeTest, FixedWidthWindowsEarliestOnTies) {
  auto cand = [](int angle, double score, bool ok = true) {
    CandidateResult c;
    c.angle = angle;
    c.ok = ok;
    c.score = score;
    return c;
  };
  const std::vector<CandidateResult> cs{cand(30, 0.1), cand(35, 0.5), cand(40, 0.5), cand(45, 0.1),
                                        cand(50, 0.9, false), cand(55, 0.2), cand(60, 0.4)};
  const auto r = find_best_range(cs, 3);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->low, 30);  // 30-40 and 35-45 tie at 1.1 / 3
  EXPECT_EQ(r->high, 40);
  EXPECT_DOUBLE_EQ(r->score, 1.1 / 3);
  const auto pair = find_best_range(cs, 2);
  EXPECT_EQ(pair->low, 35);
  EXPECT_EQ(pair->high, 40);
  const auto single = find_best_range(cs, 1);
  EXPECT_EQ(single->low, 35);
  EXPECT_EQ(single->high, 35);
  // Failures split the sweep; the window shrinks to the longest clean run.
  const auto broken = find_best_range({cand(10, 0.1), cand(15, 0.0, false), cand(20, 0.3), cand(25, 0.2)}, 3);
  EXPECT_EQ(broken->low, 20);
  EXPECT_EQ(broken->high, 25);
  EXPECT_FALSE(find_best_range({cand(10, 1.0, false)}, 3).has_value());
}

TEST(SweepTest, FailuresAreIsolatedAndCandidatesIndependent) {
  const auto f = make_fixture();
  const auto base = bell(40);
  auto fake = [&](const MitigationSet& s) {
    if (s.angle == 20) throw std::runtime_error("diverged");
    const double w = 40 + s.angle;
    return bell(w);
  };
  MitigationPlan plan;
  plan.candidate_angles = {50, 20, 10, 50};
  const auto report = run_mitigation(plan, f.manifest, f.split, f.spec, 3, base, {}, fake);
  ASSERT_EQ(report.candidates.size(), 3U);
  EXPECT_EQ(report.candidates[0].angle, 10);
  EXPECT_FALSE(report.candidates[1].ok);
  EXPECT_NE(report.candidates[1].error.find("diverged"), std::string::npos);
  EXPECT_FALSE(report.warnings.empty());

  MitigationPlan alone;
  alone.candidate_angles = {50};
  const auto solo = run_mitigation(alone, f.manifest, f.split, f.spec, 3, base, {}, fake);
  EXPECT_EQ(solo.candidates[0].delta_top1, report.candidates[2].delta_top1);
  EXPECT_EQ(solo.candidates[0].score, report.candidates[2].score);

  // Training sets for one angle do not depend on the rest of the plan.
  EXPECT_EQ(build_mitigation_trainset(f.manifest, f.split, f.spec, 50, 3).train,
            build_mitigation_trainset(f.manifest, f.split, f.spec, 50, 3).train);

  const auto table = mitigation_table(report);
  EXPECT_EQ(table.rows.size(), 3U);
  EXPECT_EQ(table.rows[1][table.column("status")], "failed");
}

}  // namespace
}  // namespace shiftlab::mitigation
