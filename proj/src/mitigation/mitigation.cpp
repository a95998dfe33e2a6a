// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/mitigation/mitigation.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "shiftlab/common/error.hpp"
#include "shiftlab/common/format.hpp"
#include "shiftlab/common/rng.hpp"

namespace shiftlab::mitigation {

namespace {

void check_angle(int x) {
  if (x < scene::kAngleStep || x > scene::kMaxAngle || x % scene::kAngleStep != 0) {
    throw ValidationError("mitigation.candidate_angles",
                          "angle " + std::to_string(x) + " must be a positive multiple of 5 within [5, 90]");
  }
}

}  // namespace

void MitigationPlan::validate() const {
  if (candidate_angles.empty()) throw ValidationError("mitigation.candidate_angles", "is empty");
  for (int x : candidate_angles) check_angle(x);
  if (!(lambda >= 0)) throw ValidationError("mitigation.lambda", "must be non-negative");
  if (max_range < 1) throw ValidationError("mitigation.max_range", "must be at least 1");
}

void to_json(nlohmann::ordered_json& j, const MitigationPlan& p) {
  j = nlohmann::ordered_json{
      {"candidate_angles", p.candidate_angles}, {"lambda", p.lambda}, {"max_range", p.max_range}};
}

void from_json(const nlohmann::ordered_json& j, MitigationPlan& p) {
  p = MitigationPlan{};
  if (j.contains("candidate_angles")) p.candidate_angles = j.at("candidate_angles").get<std::vector<int>>();
  if (j.contains("lambda")) p.lambda = j.at("lambda").get<double>();
  if (j.contains("max_range")) p.max_range = j.at("max_range").get<int>();
}

std::vector<int> normalize_candidates(const std::vector<int>& angles, std::vector<std::string>& warnings) {
  std::vector<int> out;
  std::set<int> seen;
  for (int x : angles) {
    if (x == 0) throw ValidationError("mitigation.candidate_angles", "0 is the canonical angle");
    check_angle(x);
    if (!seen.insert(x).second) {
      warnings.push_back("duplicate candidate angle " + std::to_string(x) + " ignored");
      continue;
    }
    out.push_back(x);
  }
  return out;
}

MitigationSet build_mitigation_trainset(const scene::DatasetManifest& manifest, const classifier::Split& baseline,
                                        const classifier::SplitSpec& spec, int x, uint64_t seed) {
  if (x == 0) throw ValidationError("angle", "must differ from the canonical angle 0");
  check_angle(x);
  std::map<int, size_t> per_class;
  for (size_t i : baseline.train) {
    const auto& row = manifest.rows.at(i);
    if (row.angle_deg != 0 || row.shadow) throw ValidationError("baseline", "train rows must be 0-degree, shadow-free");
    ++per_class[row.class_id()];
  }
  if (per_class.empty()) throw ValidationError("baseline", "train split is empty");

  std::map<std::pair<int, int>, std::vector<size_t>> pools;  // (class, angle)
  for (size_t i : baseline.test) {
    const auto& row = manifest.rows[i];
    if (!row.shadow && (row.angle_deg == x || row.angle_deg == -x)) pools[{row.class_id(), row.angle_deg}].push_back(i);
  }

  MitigationSet set;
  set.angle = x;
  set.train = baseline.train;
  std::vector<uint8_t> used(manifest.rows.size(), 0);
  for (int signed_x : {x, -x}) {
    for (const auto& [cls, n] : per_class) {
      const auto& pool = pools[{cls, signed_x}];
      if (pool.size() < n) {
        throw ValidationError("manifest", "cell (" + analysis::action_label(cls) + ", " + std::to_string(signed_x) +
                                              ") has " + std::to_string(pool.size()) + " rows, needs " +
                                              std::to_string(n));
      }
      const auto order = classifier::stratified_pick(manifest, pool, spec.stratify_by,
                                                     mix_seed(seed, {0x3C, cls, signed_x}));
      std::vector<size_t> picked(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
      std::sort(picked.begin(), picked.end());
      for (size_t i : picked) {
        set.train.push_back(i);
        used[i] = 1;
      }
    }
  }
  for (size_t i : baseline.test) {
    if (!used[i] && !manifest.rows[i].shadow) set.test.push_back(i);
  }
  return set;
}

CandidateResult score_candidate(int angle, const std::vector<AccuracyCurve>& curves,
                                const std::vector<AccuracyCurve>& baseline,
                                const analysis::BreakdownCriteria& criteria, double lambda) {
  if (curves.size() != baseline.size()) throw ValidationError("curves", "action sets differ from the baseline");
  CandidateResult r;
  r.angle = angle;
  r.ok = true;
  r.curves = curves;
  double top1_sum = 0;
  size_t top1_n = 0;
  double bp_sum = 0;
  int bp_n = 0;
  for (size_t a = 0; a < curves.size(); ++a) {
    const auto& c = curves[a];
    const auto& b = baseline[a];
    if (c.action != b.action || c.angles != b.angles) {
      throw ValidationError("curves", "candidate and baseline grids differ for action " + std::to_string(c.action));
    }
    for (size_t k = 0; k < c.angles.size(); ++k) {
      top1_sum += c.accuracy[k] - b.accuracy[k];
      ++top1_n;
    }
    const auto bc = analysis::breakdown_points(c, criteria);
    const auto bb = analysis::breakdown_points(b, criteria);
    r.breakdowns.push_back(bc);
    if (bc.mean_bp && bb.mean_bp) {
      bp_sum += *bc.mean_bp - *bb.mean_bp;
      ++bp_n;
    } else {
      ++r.excluded_actions;
    }
  }
  r.delta_top1 = top1_n ? top1_sum / static_cast<double>(top1_n) : 0.0;
  if (bp_n > 0) r.delta_breakdown = bp_sum / bp_n;
  r.score = r.delta_top1 + lambda * r.delta_breakdown.value_or(0.0) / scene::kMaxAngle;
  return r;
}

std::optional<BestRange> find_best_range(const std::vector<CandidateResult>& candidates, int max_range) {
  // Windows run over neighbouring candidates in the sweep; a failed one ends
  // them. A shorter window could only ever win by being a single peak, so all
  // windows share one length: max_range, or the longest successful run.
  size_t longest = 0;
  for (size_t run = 0, i = 0; i < candidates.size(); ++i) {
    run = candidates[i].ok ? run + 1 : 0;
    longest = std::max(longest, run);
  }
  const size_t len = std::min(longest, static_cast<size_t>(max_range));
  if (len == 0) return std::nullopt;
  std::optional<BestRange> best;
  for (size_t start = 0; start + len <= candidates.size(); ++start) {
    double sum = 0;
    bool ok = true;
    for (size_t k = start; k < start + len; ++k) {
      ok = ok && candidates[k].ok;
      sum += candidates[k].score;
    }
    if (!ok) continue;
    const double mean = sum / static_cast<double>(len);
    if (!best || mean > best->score) best = BestRange{candidates[start].angle, candidates[start + len - 1].angle, mean};
  }
  return best;
}

MitigationReport run_mitigation(const MitigationPlan& plan, const scene::DatasetManifest& manifest,
                                const classifier::Split& baseline_split, const classifier::SplitSpec& split_spec,
                                uint64_t seed, const std::vector<AccuracyCurve>& baseline_curves,
                                const analysis::BreakdownCriteria& criteria, const TrainEvalFn& train_eval) {
  plan.validate();
  MitigationReport report;
  report.baseline_curves = baseline_curves;
  for (const auto& c : baseline_curves) report.baseline_breakdowns.push_back(analysis::breakdown_points(c, criteria));
  std::vector<int> angles = normalize_candidates(plan.candidate_angles, report.warnings);
  std::sort(angles.begin(), angles.end());
  for (int x : angles) {
    try {
      const MitigationSet set = build_mitigation_trainset(manifest, baseline_split, split_spec, x, seed);
      report.candidates.push_back(score_candidate(x, train_eval(set), baseline_curves, criteria, plan.lambda));
    } catch (const std::exception& e) {
      CandidateResult failed;
      failed.angle = x;
      failed.error = e.what();
      report.candidates.push_back(std::move(failed));
      report.warnings.push_back("candidate " + std::to_string(x) + " failed: " + e.what());
    }
  }
  report.best_range = find_best_range(report.candidates, plan.max_range);
  return report;
}

analysis::CsvTable mitigation_table(const MitigationReport& report) {
  analysis::CsvTable t;
  t.header = {"angle", "status", "delta_top1", "delta_breakdown", "excluded_actions", "score"};
  for (const auto& c : report.candidates) {
    if (!c.ok) {
      t.rows.push_back({std::to_string(c.angle), "failed", "", "", "", ""});
      continue;
    }
    t.rows.push_back({std::to_string(c.angle), "ok", format_double(c.delta_top1),
                      c.delta_breakdown ? format_double(*c.delta_breakdown) : std::string(analysis::kNone),
                      std::to_string(c.excluded_actions), format_double(c.score)});
  }
  return t;
}

nlohmann::ordered_json report_to_json(const MitigationReport& report) {
  nlohmann::ordered_json j;
  auto& cands = j["candidates"] = nlohmann::ordered_json::array();
  for (const auto& c : report.candidates) {
    nlohmann::ordered_json e{{"angle", c.angle}, {"status", c.ok ? "ok" : "failed"}};
    if (c.ok) {
      e["delta_top1"] = c.delta_top1;
      e["delta_breakdown"] = c.delta_breakdown ? nlohmann::ordered_json(*c.delta_breakdown) : nullptr;
      e["excluded_actions"] = c.excluded_actions;
      e["score"] = c.score;
    } else {
      e["error"] = c.error;
    }
    cands.push_back(std::move(e));
  }
  if (report.best_range) {
    j["best_range"] = {{"low", report.best_range->low},
                       {"high", report.best_range->high},
                       {"score", report.best_range->score}};
  } else {
    j["best_range"] = nullptr;
  }
  j["warnings"] = report.warnings;
  return j;
}

}  // namespace shiftlab::mitigation
