// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>
#include <unordered_set>

#include "CLI11.hpp"
#include "shiftlab/analysis/plot.hpp"
#include "shiftlab/analysis/shadow.hpp"
#include "shiftlab/analysis/table.hpp"
#include "shiftlab/classifier/evaluate.hpp"
#include "shiftlab/classifier/inputs.hpp"
#include "shiftlab/common/digest.hpp"
#include "shiftlab/common/error.hpp"
#include "shiftlab/common/format.hpp"

namespace shiftlab::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using analysis::CsvTable;
using classifier::AccuracyCurve;
using classifier::Prediction;

namespace {

constexpr char kTotalDropDefinition[] =
    "total_drop: mean over the angle grid of (no-shadow accuracy - condition accuracy)";
constexpr char kManifest[] = "corpus/manifest.jsonl";
constexpr char kManifestMeta[] = "corpus/manifest.meta.json";
constexpr char kModel[] = "models/baseline.bin";
constexpr char kModelSidecar[] = "models/baseline.json";
constexpr char kBaselinePredictions[] = "predictions/baseline_test.jsonl";

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_text(const fs::path& root, const std::string& rel, const std::string& text) {
  write_file_atomic((root / rel).string(), text);
}

std::string meta_path(const std::string& rel) { return rel + ".meta.json"; }

std::string digest_comment(const std::string& digest) { return "config_digest: " + digest; }

CsvTable with_digest(CsvTable t, const std::string& digest, std::vector<std::string> extra = {}) {
  t.comments.insert(t.comments.begin(), digest_comment(digest));
  for (auto& e : extra) t.comments.push_back(std::move(e));
  return t;
}

ordered_json read_json(const fs::path& path) {
  try {
    return ordered_json::parse(read_file(path.string()));
  } catch (const std::exception& e) {
    throw StageError("cannot read " + path.string() + ": " + e.what());
  }
}

void require_digest(const fs::path& path, const std::string& found, const std::string& expected) {
  if (found != expected) {
    throw ValidationError("artifact", path.string() + " was produced under config digest " + found.substr(0, 12) +
                                          ", expected " + expected.substr(0, 12) + "; refusing mismatched input");
  }
}

scene::DatasetManifest load_manifest(const fs::path& root, const std::string& digest) {
  const auto meta = read_json(root / kManifestMeta);
  require_digest(root / kManifestMeta, meta.value("config_digest", ""), digest);
  const std::string text = read_file((root / kManifest).string());
  if (sha256_hex(text) != meta.value("manifest_sha256", "")) {
    throw StageError("manifest does not match its recorded digest; rerun synth");
  }
  return scene::DatasetManifest::from_jsonl(text, meta.at("image_size").get<int>());
}

void save_predictions(const fs::path& root, const std::string& rel, const std::vector<Prediction>& preds,
                      const std::string& digest, const std::string& model_id) {
  write_text(root, rel, classifier::predictions_to_jsonl(preds));
  ordered_json meta{{"config_digest", digest}, {"model_id", model_id}, {"rows", preds.size()}};
  write_text(root, meta_path(rel), meta.dump(2) + "\n");
}

std::vector<Prediction> load_predictions(const fs::path& root, const std::string& rel, const std::string& digest) {
  const auto meta = read_json(root / meta_path(rel));
  require_digest(root / meta_path(rel), meta.value("config_digest", ""), digest);
  return classifier::predictions_from_jsonl(read_file((root / rel).string()));
}

classifier::Model load_checked_model(const fs::path& root, const std::string& bin, const std::string& sidecar,
                                     const std::string& digest) {
  auto model = classifier::load_model(root / bin, root / sidecar);
  require_digest(root / sidecar, model.config_digest, digest);
  return model;
}

std::vector<std::pair<std::string, AccuracyCurve>> label_all(const std::string& label,
                                                             const std::vector<AccuracyCurve>& curves) {
  std::vector<std::pair<std::string, AccuracyCurve>> out;
  for (const auto& c : curves) out.emplace_back(label, c);
  return out;
}

std::string level_label(analysis::ShadowAttribute a, double level) {
  return std::string(analysis::attribute_name(a)) + "=" + format_double(level);
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json direction_json(const analysis::DirectionResult& d) {
  return {{"angle", d.angle ? ordered_json(*d.angle) : ordered_json(nullptr)},
          {"trigger", std::string(analysis::trigger_name(d.trigger))}};
}

// ---- plots, derived from CSV only ----

void write_svg(const fs::path& root, const std::string& rel, const CsvTable& source, const std::string& svg) {
  write_text(root, rel, "<!-- " + digest_comment(source.comment_value("config_digest")) + " -->\n" + svg);
}

std::vector<fs::path> plot_baseline(const fs::path& root) {
  std::vector<fs::path> out;
  const auto curves_path = root / "reports/baseline_curves.csv";
  if (fs::exists(curves_path)) {
    const auto table = CsvTable::parse(read_file(curves_path.string()));
    const auto groups = analysis::curves_from_table(table);
    std::vector<analysis::Series> series;
    for (const auto& [cond, curves] : groups) {
      for (const auto& c : curves) {
        series.push_back({analysis::action_label(c.action), {c.angles.begin(), c.angles.end()}, c.accuracy});
      }
    }
    write_svg(root, "plots/baseline_accuracy.svg", table,
              analysis::svg_line_chart({"Top-1 accuracy vs rotation (trained at 0 deg)", "angle (deg)",
                                         "top-1 accuracy", 0.0, 1.0},
                                        series));
    out.push_back(root / "plots/baseline_accuracy.svg");
  }
  const auto bp_path = root / "reports/baseline_breakdown.csv";
  if (fs::exists(bp_path)) {
    const auto t = CsvTable::parse(read_file(bp_path.string()));
    std::vector<std::string> cats;
    analysis::BarGroup pos{"positive", {}}, neg{"negative (abs)", {}}, mean{"mean", {}};
    auto value = [](const std::string& s) -> std::optional<double> {
      if (s == analysis::kNone) return std::nullopt;
      return std::abs(parse_double(s));
    };
    for (const auto& r : t.rows) {
      cats.push_back(r[t.column("action")]);
      pos.values.push_back(value(r[t.column("positive_bp")]));
      neg.values.push_back(value(r[t.column("negative_bp")]));
      mean.values.push_back(value(r[t.column("mean_bp")]));
    }
    write_svg(root, "plots/baseline_breakdown.svg", t,
              analysis::svg_bar_chart({"Breakdown points", "action", "angle (deg)", 0.0, 90.0}, cats,
                                       {pos, neg, mean}));
    out.push_back(root / "plots/baseline_breakdown.svg");
  }
  return out;
}

std::vector<fs::path> plot_shadow(const fs::path& root) {
  std::vector<fs::path> out;
  const auto cond_path = root / "reports/shadow_conditions.csv";
  if (fs::exists(cond_path)) {
    const auto t = CsvTable::parse(read_file(cond_path.string()));
    std::map<std::string, std::vector<const std::vector<std::string>*>> by_attr;
    for (const auto& r : t.rows) by_attr[r[t.column("attribute")]].push_back(&r);
    for (const auto& [attr, rows] : by_attr) {
      std::vector<std::string> levels;
      std::vector<std::string> actions;
      for (const auto* r : rows) {
        const auto& lv = (*r)[t.column("level")];
        const auto& ac = (*r)[t.column("action")];
        if (std::find(levels.begin(), levels.end(), lv) == levels.end()) levels.push_back(lv);
        if (std::find(actions.begin(), actions.end(), ac) == actions.end()) actions.push_back(ac);
      }
      std::vector<analysis::BarGroup> groups;
      for (const auto& ac : actions) {
        analysis::BarGroup g{ac, std::vector<std::optional<double>>(levels.size())};
        for (const auto* r : rows) {
          if ((*r)[t.column("action")] != ac) continue;
          const auto pos = std::find(levels.begin(), levels.end(), (*r)[t.column("level")]) - levels.begin();
          g.values[static_cast<size_t>(pos)] = parse_double((*r)[t.column("total_drop")]);
        }
        groups.push_back(std::move(g));
      }
      const std::string rel = "plots/shadow_drop_" + attr + ".svg";
      write_svg(root, rel, t,
                analysis::svg_bar_chart({"Total top-1 drop by " + attr, attr, "total drop", std::nullopt,
                                          std::nullopt},
                                         levels, groups));
      out.push_back(root / rel);
    }
  }
  const auto curves_path = root / "reports/shadow_curves.csv";
  if (fs::exists(curves_path)) {
    const auto table = CsvTable::parse(read_file(curves_path.string()));
    const auto groups = analysis::curves_from_table(table);
    // One chart per (action, attribute): the no-shadow curve plus each level.
    std::map<std::pair<int, std::string>, std::vector<analysis::Series>> charts;
    std::map<int, analysis::Series> reference;
    for (const auto& [cond, curves] : groups) {
      for (const auto& c : curves) {
        analysis::Series s{cond, {c.angles.begin(), c.angles.end()}, c.accuracy};
        if (cond == "none") {
          reference[c.action] = s;
          continue;
        }
        charts[{c.action, cond.substr(0, cond.find('='))}].push_back(s);
      }
    }
    for (auto& [key, series] : charts) {
      if (reference.count(key.first)) series.insert(series.begin(), reference[key.first]);
      const std::string action = analysis::action_label(key.first);
      const std::string rel = "plots/shadow_" + action + "_" + key.second + ".svg";
      write_svg(root, rel, table,
                analysis::svg_line_chart({action + ": accuracy by " + key.second, "angle (deg)", "top-1 accuracy",
                                           0.0, 1.0},
                                          series));
      out.push_back(root / rel);
    }
  }
  return out;
}

std::vector<fs::path> plot_mitigation(const fs::path& root) {
  std::vector<fs::path> out;
  const auto path = root / "reports/mitigation.csv";
  if (!fs::exists(path)) return out;
  const auto t = CsvTable::parse(read_file(path.string()));
  analysis::Series top1{"delta top-1", {}, {}};
  analysis::Series bp{"delta breakdown", {}, {}};
  for (const auto& r : t.rows) {
    if (r[t.column("status")] != "ok") continue;
    const double x = parse_double(r[t.column("angle")]);
    top1.x.push_back(x);
    top1.y.push_back(parse_double(r[t.column("delta_top1")]));
    const auto& b = r[t.column("delta_breakdown")];
    if (b != analysis::kNone) {
      bp.x.push_back(x);
      bp.y.push_back(parse_double(b));
    }
  }
  write_svg(root, "plots/mitigation_delta_breakdown.svg", t,
             analysis::svg_line_chart({"Average change in breakdown point", "additional training angle x (deg)",
                                       "delta mean breakdown (deg)", std::nullopt, std::nullopt},
                                      {bp}));
  write_svg(root, "plots/mitigation_delta_top1.svg", t,
             analysis::svg_line_chart({"Average change in top-1 accuracy", "additional training angle x (deg)",
                                       "delta top-1", std::nullopt, std::nullopt},
                                      {top1}));
  out.push_back(root / "plots/mitigation_delta_breakdown.svg");
  out.push_back(root / "plots/mitigation_delta_top1.svg");
  return out;
}

}  // namespace

Experiment::Experiment(ExperimentConfig config, unsigned workers, std::ostream& log)
    : config_(config.resolved()),
      workers_(std::max(1U, workers)),
      log_(log),
      root_(config_.output_dir),
      ledger_((fs::create_directories(root_), root_)) {
  ordered_json j = config_.to_json();
  j["config_digest"] = config_.digest();
  write_text(root_, "config.json", j.dump(2) + "\n");
}

fs::path Experiment::synth() {
  const std::string digest = config_.corpus_digest();
  if (ledger_.up_to_date("synth", digest)) {
    log_ << "synth: up-to-date\n";
    return root_ / kManifest;
  }
  Stopwatch watch;
  const auto manifest = scene::generate_dataset(config_.corpus, root_ / "corpus", workers_);
  const std::string text = read_file((root_ / kManifest).string());
  ordered_json meta{{"config_digest", digest},
                    {"rows", manifest.rows.size()},
                    {"image_size", manifest.image_size},
                    {"manifest_sha256", sha256_hex(text)},
                    {"generation", config_.corpus}};
  write_text(root_, kManifestMeta, meta.dump(2) + "\n");
  ledger_.append("synth", digest, {kManifest, kManifestMeta}, watch.seconds());
  log_ << "synth: " << manifest.rows.size() << " rows in " << root_ / "corpus" << "\n";
  return root_ / kManifest;
}

fs::path Experiment::baseline() {
  synth();
  const std::string digest = config_.baseline_digest();
  const fs::path report = root_ / "reports/baseline.json";
  if (ledger_.up_to_date("baseline", digest)) {
    log_ << "baseline: up-to-date\n";
    return report;
  }
  Stopwatch watch;
  const auto manifest = load_manifest(root_, config_.corpus_digest());
  const auto split = classifier::split_canonical(manifest, config_.split, config_.split_seed());
  const classifier::DiskImageSource source(root_ / "corpus", manifest.image_size);
  const int input_size = config_.train.network.input_size;
  const auto inputs = classifier::inputs_from_source(source, manifest, input_size);

  const std::string model_digest = config_.model_digest();
  classifier::Model model;
  if (ledger_.up_to_date("train", model_digest)) {
    log_ << "baseline: reusing cached model\n";
    model = load_checked_model(root_, kModel, kModelSidecar, model_digest);
  } else {
    classifier::InputCache cache(inputs, split.train, manifest.rows.size(), input_size, workers_);
    std::vector<classifier::TrainingExample> examples;
    for (size_t i : split.train) {
      const auto px = cache.get(i);
      examples.push_back({manifest.rows[i].relative_path, manifest.rows[i].class_id(), {px.begin(), px.end()}});
    }
    auto result = classifier::train(std::move(examples), config_.train, workers_);
    for (const auto& line : result.log) log_ << "train: " << line << "\n";
    model = std::move(result.model);
    model.config_digest = model_digest;
    classifier::save_checkpoint(model, root_ / kModel);
    classifier::save_sidecar(model, root_ / kModel, root_ / kModelSidecar,
                             {{"final_train_accuracy", result.final_train_accuracy},
                              {"converged", result.converged},
                              {"log", result.log}});
    ledger_.append("train", model_digest, {kModel, kModelSidecar}, watch.seconds());
  }

  std::vector<size_t> test;
  for (size_t i : split.test) {
    if (!manifest.rows[i].shadow) test.push_back(i);
  }
  const auto preds = classifier::predict(model, manifest, test, inputs, workers_);
  save_predictions(root_, kBaselinePredictions, preds, digest, model.id());
  const auto curves = classifier::evaluate_curves(preds, manifest, scene::angle_grid());

  std::vector<std::pair<std::string, analysis::BreakdownResult>> bps;
  ordered_json actions = ordered_json::array();
  double spearman_sum = 0;
  int spearman_n = 0;
  for (const auto& c : curves) {
    const auto bp = analysis::breakdown_points(c, config_.criteria);
    bps.emplace_back("none", bp);
    const auto rho = analysis::angle_accuracy_spearman(c);
    if (rho) spearman_sum += *rho, ++spearman_n;
    actions.push_back({{"action", analysis::action_label(c.action)},
                       {"top1_at_0", c.at(0)},
                       {"spearman_abs_angle", optional_json(rho)},
                       {"positive", direction_json(bp.positive)},
                       {"negative", direction_json(bp.negative)},
                       {"mean_bp", optional_json(bp.mean_bp)}});
  }
  long long c0 = 0, n0 = 0;
  for (const auto& c : curves) {
    for (size_t k = 0; k < c.angles.size(); ++k) {
      if (c.angles[k] == 0) c0 += c.correct[k], n0 += c.count[k];
    }
  }
  ordered_json summary{{"config_digest", digest},
                       {"model_id", model.id()},
                       {"train_rows", split.train.size()},
                       {"test_rows", test.size()},
                       {"held_out_0deg_top1", n0 ? static_cast<double>(c0) / static_cast<double>(n0) : 0.0},
                       {"mean_spearman_abs_angle",
                        spearman_n ? ordered_json(spearman_sum / spearman_n) : ordered_json(nullptr)},
                       {"criteria", config_.criteria},
                       {"actions", actions}};
  write_text(root_, "reports/baseline_curves.csv",
             with_digest(analysis::curves_table(label_all("none", curves)), digest).to_string());
  write_text(root_, "reports/baseline_breakdown.csv", with_digest(analysis::breakdown_table(bps), digest).to_string());
  write_text(root_, "reports/baseline.json", summary.dump(2) + "\n");
  plot_baseline(root_);
  ledger_.append("baseline", digest,
                 {kBaselinePredictions, meta_path(kBaselinePredictions), "reports/baseline_curves.csv",
                  "reports/baseline_breakdown.csv", "reports/baseline.json"},
                 watch.seconds());
  log_ << "baseline: held-out 0-degree top-1 " << summary["held_out_0deg_top1"].get<double>() << ", reports in "
       << root_ / "reports" << "\n";
  return report;
}

fs::path Experiment::shadow() {
  const fs::path report = root_ / "reports/shadow.json";
  if (!config_.corpus.shadow) {
    log_ << "warning: shadow grid is empty; nothing to evaluate\n";
    return report;
  }
  baseline();
  const std::string digest = config_.shadow_digest();
  if (ledger_.up_to_date("shadow", digest)) {
    log_ << "shadow: up-to-date\n";
    return report;
  }
  Stopwatch watch;
  const auto& grid = *config_.corpus.shadow;
  const auto manifest = load_manifest(root_, config_.corpus_digest());
  const auto split = classifier::split_canonical(manifest, config_.split, config_.split_seed());
  const auto model = load_checked_model(root_, kModel, kModelSidecar, config_.model_digest());
  const classifier::DiskImageSource source(root_ / "corpus", manifest.image_size);
  const auto inputs = classifier::inputs_from_source(source, manifest, config_.train.network.input_size);

  // Shadow rows whose base image was used for training are not test data.
  std::unordered_set<std::string> train_bases;
  for (size_t i : split.train) train_bases.insert(manifest.rows[i].base_key());
  std::vector<size_t> shadow_rows;
  std::unordered_set<std::string> shadow_bases;
  for (size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    if (!row.shadow || train_bases.count(row.base_key())) continue;
    shadow_rows.push_back(i);
    shadow_bases.insert(row.base_key());
  }
  // The no-shadow reference uses exactly the base images the shadows are drawn on.
  std::vector<size_t> base_rows;
  for (size_t i = 0; i < manifest.rows.size(); ++i) {
    if (!manifest.rows[i].shadow && shadow_bases.count(manifest.rows[i].base_key())) base_rows.push_back(i);
  }
  const auto shadow_preds = classifier::predict(model, manifest, shadow_rows, inputs, workers_);
  const auto base_preds = classifier::predict(model, manifest, base_rows, inputs, workers_);
  save_predictions(root_, "predictions/shadow.jsonl", shadow_preds, digest, model.id());
  save_predictions(root_, "predictions/shadow_base.jsonl", base_preds, digest, model.id());

  const auto grid_angles = scene::angle_grid();
  std::vector<int> actions;
  for (auto a : grid.actions) actions.push_back(scene::index_of(a));
  const auto references = classifier::evaluate_curves(base_preds, manifest, grid_angles, actions);
  const auto observations = analysis::join_predictions(shadow_preds, manifest);

  std::vector<analysis::ConditionResult> conditions;
  std::vector<std::pair<std::string, AccuracyCurve>> curves;
  std::vector<std::pair<std::string, analysis::BreakdownResult>> bps;
  ordered_json per_action = ordered_json::array();
  for (const auto& ref : references) {
    curves.emplace_back("none", ref);
    bps.emplace_back("none", analysis::breakdown_points(ref, config_.criteria));
  }
  for (const auto attr : analysis::kShadowAttributes) {
    for (const auto& ref : references) {
      for (double level : analysis::attribute_levels(grid, attr)) {
        auto r = analysis::marginalize(observations, ref.action, attr, level, grid, grid_angles, ref);
        const std::string label = level_label(attr, level);
        curves.emplace_back(label, r.curve);
        bps.emplace_back(label, analysis::breakdown_points(r.curve, config_.criteria));
        conditions.push_back(std::move(r));
      }
    }
  }
  for (const auto& c : conditions) {
    per_action.push_back({{"action", analysis::action_label(c.action)},
                          {"attribute", std::string(analysis::attribute_name(c.attribute))},
                          {"level", c.level},
                          {"total_drop", c.total_drop}});
  }
  const std::vector<std::string> extra{kTotalDropDefinition};
  write_text(root_, "reports/shadow_conditions.csv",
             with_digest(analysis::condition_table(conditions), digest, extra).to_string());
  write_text(root_, "reports/shadow_curves.csv",
             with_digest(analysis::curves_table(curves), digest, extra).to_string());
  write_text(root_, "reports/shadow_breakdown.csv", with_digest(analysis::breakdown_table(bps), digest).to_string());
  ordered_json summary{{"config_digest", digest},
                       {"model_id", model.id()},
                       {"total_drop_definition", kTotalDropDefinition},
                       {"shadow_rows", shadow_rows.size()},
                       {"reference_rows", base_rows.size()},
                       {"conditions", per_action}};
  write_text(root_, "reports/shadow.json", summary.dump(2) + "\n");
  plot_shadow(root_);
  ledger_.append("shadow", digest,
                 {"predictions/shadow.jsonl", meta_path("predictions/shadow.jsonl"), "predictions/shadow_base.jsonl",
                  meta_path("predictions/shadow_base.jsonl"), "reports/shadow_conditions.csv",
                  "reports/shadow_curves.csv", "reports/shadow_breakdown.csv", "reports/shadow.json"},
                 watch.seconds());
  log_ << "shadow: " << shadow_rows.size() << " shadow rows evaluated, reports in " << root_ / "reports" << "\n";
  return report;
}

std::pair<fs::path, bool> Experiment::mitigate(const std::optional<std::vector<int>>& angles) {
  mitigation::MitigationPlan plan = config_.mitigation;
  if (angles) plan.candidate_angles = *angles;
  plan.validate();
  baseline();
  const std::string digest = config_.mitigation_report_digest(plan);
  const fs::path report_path = root_ / "reports/mitigation.json";
  if (ledger_.up_to_date("mitigate", digest)) {
    log_ << "mitigate: up-to-date\n";
    const auto cached = read_json(report_path).at("candidates");
    const bool any_ok =
        std::any_of(cached.begin(), cached.end(), [](const auto& c) { return c.at("status") == "ok"; });
    return {report_path, any_ok};
  }
  Stopwatch watch;
  const auto manifest = load_manifest(root_, config_.corpus_digest());
  const auto split = classifier::split_canonical(manifest, config_.split, config_.split_seed());
  const classifier::DiskImageSource source(root_ / "corpus", manifest.image_size);
  const int input_size = config_.train.network.input_size;
  const auto inputs = classifier::inputs_from_source(source, manifest, input_size);
  const auto baseline_preds = load_predictions(root_, kBaselinePredictions, config_.baseline_digest());
  const auto baseline_curves = classifier::evaluate_curves(baseline_preds, manifest, scene::angle_grid());

  auto train_eval = [&](const mitigation::MitigationSet& set) {
    char tag[16];
    std::snprintf(tag, sizeof tag, "x%02d", set.angle);
    const std::string stage = std::string("mitigate_") + tag;
    const std::string digest = config_.mitigation_digest(set.angle);
    const std::string preds_rel = std::string("predictions/mitigation_") + tag + ".jsonl";
    if (ledger_.up_to_date(stage, digest)) {
      log_ << "mitigate: " << tag << " up-to-date\n";
      return classifier::evaluate_curves(load_predictions(root_, preds_rel, digest), manifest, scene::angle_grid());
    }
    Stopwatch candidate_watch;
    classifier::InputCache cache(inputs, set.train, manifest.rows.size(), input_size, workers_);
    std::vector<classifier::TrainingExample> examples;
    for (size_t i : set.train) {
      const auto px = cache.get(i);
      examples.push_back({manifest.rows[i].relative_path, manifest.rows[i].class_id(), {px.begin(), px.end()}});
    }
    auto result = classifier::train(std::move(examples), config_.train, workers_);
    if (!result.converged) log_ << "mitigate: " << tag << " " << result.log.back() << "\n";
    result.model.config_digest = digest;
    const std::string bin = std::string("models/mitigation_") + tag + ".bin";
    const std::string side = std::string("models/mitigation_") + tag + ".json";
    classifier::save_checkpoint(result.model, root_ / bin);
    classifier::save_sidecar(result.model, root_ / bin, root_ / side,
                             {{"final_train_accuracy", result.final_train_accuracy},
                              {"converged", result.converged},
                              {"angle", set.angle}});
    const auto preds = classifier::predict(result.model, manifest, set.test, inputs, workers_);
    save_predictions(root_, preds_rel, preds, digest, result.model.id());
    ledger_.append(stage, digest, {bin, side, preds_rel, meta_path(preds_rel)}, candidate_watch.seconds());
    log_ << "mitigate: " << tag << " trained on " << set.train.size() << " rows\n";
    return classifier::evaluate_curves(preds, manifest, scene::angle_grid());
  };

  const auto report = mitigation::run_mitigation(plan, manifest, split, config_.split, config_.mitigation_seed(),
                                                 baseline_curves, config_.criteria, train_eval);
  for (const auto& w : report.warnings) log_ << "warning: " << w << "\n";
  ordered_json j = mitigation::report_to_json(report);
  j["config_digest"] = digest;
  j["plan"] = plan;
  j["score_definition"] = "score = delta_top1 + lambda * delta_breakdown / 90";
  j["lambda"] = plan.lambda;
  write_text(root_, "reports/mitigation.csv",
             with_digest(mitigation::mitigation_table(report), digest,
                         {"score = delta_top1 + lambda * delta_breakdown / 90; lambda = " +
                          format_double(plan.lambda)})
                 .to_string());
  write_text(root_, "reports/mitigation.json", j.dump(2) + "\n");
  plot_mitigation(root_);
  const bool any_ok = std::any_of(report.candidates.begin(), report.candidates.end(),
                                  [](const auto& c) { return c.ok; });
  ledger_.append("mitigate", digest, {"reports/mitigation.csv", "reports/mitigation.json"}, watch.seconds());
  if (report.best_range) {
    log_ << "mitigate: best range " << report.best_range->low << "-" << report.best_range->high << " deg (score "
         << report.best_range->score << ")\n";
  }
  return {report_path, any_ok};
}

std::vector<fs::path> Experiment::report() {
  struct Expected {
    const char* rel;
    std::string digest;
  };
  const std::vector<Expected> tables{{"reports/baseline_curves.csv", config_.baseline_digest()},
                                     {"reports/baseline_breakdown.csv", config_.baseline_digest()},
                                     {"reports/shadow_conditions.csv", config_.shadow_digest()},
                                     {"reports/shadow_curves.csv", config_.shadow_digest()}};
  bool any = false;
  for (const auto& t : tables) {
    const auto path = root_ / t.rel;
    if (!fs::exists(path)) continue;
    any = true;
    const auto table = CsvTable::parse(read_file(path.string()));
    require_digest(path, table.comment_value("config_digest"), t.digest);
  }
  const auto mitigation_json = root_ / "reports/mitigation.json";
  if (fs::exists(mitigation_json) && fs::exists(root_ / "reports/mitigation.csv")) {
    any = true;
    const auto plan = read_json(mitigation_json).at("plan").get<mitigation::MitigationPlan>();
    const auto table = CsvTable::parse(read_file((root_ / "reports/mitigation.csv").string()));
    require_digest(root_ / "reports/mitigation.csv", table.comment_value("config_digest"),
                   config_.mitigation_report_digest(plan));
  }
  if (!any) throw StageError("no report tables under " + (root_ / "reports").string() + "; run a stage first");
  std::vector<fs::path> out = plot_baseline(root_);
  for (auto& p : plot_shadow(root_)) out.push_back(std::move(p));
  for (auto& p : plot_mitigation(root_)) out.push_back(std::move(p));
  for (const auto& p : out) log_ << "report: wrote " << p.string() << "\n";
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Controlled rotation and shadow shift experiments for a small image classifier", "shiftlab"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  std::string angles_text;
  unsigned workers = std::max(1U, std::thread::hardware_concurrency());
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment configuration (JSON)");
    sub->add_option("--seed", seed, "master seed, overrides the configuration");
    sub->add_option("--out", out_dir, "experiment directory, overrides the configuration");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* synth = app.add_subcommand("synth", "render the corpus and write the manifest");
  auto* baseline = app.add_subcommand("baseline", "train at 0 degrees, evaluate curves and breakdown points");
  auto* shadow = app.add_subcommand("shadow", "evaluate the baseline model on shadow conditions");
  auto* mitigate = app.add_subcommand("mitigate", "retrain with additional angles and report the deltas");
  auto* report = app.add_subcommand("report", "regenerate plots from report tables");
  for (auto* s : {synth, baseline, shadow, mitigate, report}) add_common(s);
  mitigate->add_option("--angles", angles_text, "comma-separated candidate angles, e.g. 50,55,60");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : ExperimentConfig::load(config_path);
    if (seed) config.master_seed = *seed;
    if (!out_dir.empty()) config.output_dir = out_dir;
    std::optional<std::vector<int>> angles;
    if (!angles_text.empty()) {
      angles.emplace();
      for (const auto& part : split(angles_text, ',')) {
        try {
          angles->push_back(static_cast<int>(parse_int(part)));
        } catch (const std::invalid_argument&) {
          throw ValidationError("angles", "not an integer list: " + angles_text);
        }
      }
    }
    Experiment exp(config, workers, out);
    if (synth->parsed()) exp.synth();
    if (baseline->parsed()) exp.baseline();
    if (shadow->parsed()) exp.shadow();
    if (report->parsed()) exp.report();
    if (mitigate->parsed()) {
      const auto [path, ok] = exp.mitigate(angles);
      if (!ok) {
        err << "error: every mitigation candidate failed\n";
        return kExitStageFailure;
      }
    }
    return kExitOk;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitStageFailure;
  }
}

}  // namespace shiftlab::cli
