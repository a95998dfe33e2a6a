// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "shiftlab/analysis/breakdown.hpp"
#include "shiftlab/analysis/table.hpp"
#include "shiftlab/classifier/split.hpp"
#include "shiftlab/scene/dataset.hpp"

namespace shiftlab::mitigation {

using analysis::AccuracyCurve;
using analysis::BreakdownResult;

struct MitigationPlan {
  std::vector<int> candidate_angles{5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85, 90};
  double lambda = 1.0;  // weight of delta_breakdown / 90 in the range score
  int max_range = 3;    // widest window of consecutive candidates for best_range

  void validate() const;
};

void to_json(nlohmann::ordered_json& j, const MitigationPlan& p);
void from_json(const nlohmann::ordered_json& j, MitigationPlan& p);

/// Validates each angle and drops repeats, keeping first occurrences.
/// One warning line per dropped duplicate.
std::vector<int> normalize_candidates(const std::vector<int>& angles, std::vector<std::string>& warnings);

struct MitigationSet {
  int angle = 0;
  std::vector<size_t> train;  // baseline 0-degree rows, then +x rows, then -x rows
  std::vector<size_t> test;   // shadow-free baseline test rows minus the +x/-x rows used
};

/// Adds, per class, as many rows at +x and at -x as the baseline split holds
/// at 0 degrees. Throws ValidationError naming the first short cell.
MitigationSet build_mitigation_trainset(const scene::DatasetManifest& manifest, const classifier::Split& baseline,
                                        const classifier::SplitSpec& spec, int x, uint64_t seed);

struct CandidateResult {
  int angle = 0;
  bool ok = false;
  std::string error;
  std::vector<AccuracyCurve> curves;
  std::vector<BreakdownResult> breakdowns;
  double delta_top1 = 0;                   // mean over actions and angles
  std::optional<double> delta_breakdown;   // mean over actions with both mean_bp defined
  int excluded_actions = 0;                // actions dropped from delta_breakdown
  double score = 0;
};

/// Deltas of `curves` against the baseline. Pure; curves must cover the same
/// actions and angles as the baseline.
CandidateResult score_candidate(int angle, const std::vector<AccuracyCurve>& curves,
                                const std::vector<AccuracyCurve>& baseline,
                                const analysis::BreakdownCriteria& criteria, double lambda);

struct BestRange {
  int low = 0;
  int high = 0;
  double score = 0;
};

struct MitigationReport {
  std::vector<AccuracyCurve> baseline_curves;
  std::vector<BreakdownResult> baseline_breakdowns;
  std::vector<CandidateResult> candidates;  // ascending angle
  std::optional<BestRange> best_range;
  std::vector<std::string> warnings;
};

/// Window of consecutive successful candidates with the highest mean score;
/// ties go to the lower angles. Every window has min(max_range, longest run of
/// successful candidates) members.
std::optional<BestRange> find_best_range(const std::vector<CandidateResult>& candidates, int max_range);

/// Trains on one mitigation set and returns per-action curves.
using TrainEvalFn = std::function<std::vector<AccuracyCurve>(const MitigationSet&)>;

/// Runs each candidate independently. A candidate whose set construction or
/// training throws is recorded as failed; the sweep continues.
MitigationReport run_mitigation(const MitigationPlan& plan, const scene::DatasetManifest& manifest,
                                const classifier::Split& baseline_split, const classifier::SplitSpec& split_spec,
                                uint64_t seed, const std::vector<AccuracyCurve>& baseline_curves,
                                const analysis::BreakdownCriteria& criteria, const TrainEvalFn& train_eval);

/// Columns: angle, status, delta_top1, delta_breakdown, excluded_actions, score.
analysis::CsvTable mitigation_table(const MitigationReport& report);

nlohmann::ordered_json report_to_json(const MitigationReport& report);

}  // namespace shiftlab::mitigation
