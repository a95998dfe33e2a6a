// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "shiftlab/cli/ledger.hpp"

#include <stdexcept>

#include "json.hpp"
#include "shiftlab/common/digest.hpp"
#include "shiftlab/common/format.hpp"

namespace shiftlab::cli {

using nlohmann::ordered_json;

RunLedger::RunLedger(std::filesystem::path root) : root_(std::move(root)) {
  const auto path = root_ / "ledger.json";
  if (!std::filesystem::exists(path)) return;
  try {
    const auto j = ordered_json::parse(read_file(path.string()));
    for (const auto& r : j.at("stages")) {
      StageRecord rec;
      rec.stage = r.at("stage").get<std::string>();
      rec.inputs_digest = r.at("inputs_digest").get<std::string>();
      for (const auto& [k, v] : r.at("artifacts").items()) rec.artifacts[k] = v.get<std::string>();
      rec.seconds = r.value("seconds", 0.0);
      records_.push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    throw std::runtime_error("unreadable ledger " + path.string() + ": " + e.what());
  }
}

std::optional<StageRecord> RunLedger::latest(const std::string& stage) const {
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->stage == stage) return *it;
  }
  return std::nullopt;
}

bool RunLedger::up_to_date(const std::string& stage, const std::string& inputs_digest) const {
  const auto rec = latest(stage);
  if (!rec || rec->inputs_digest != inputs_digest) return false;
  for (const auto& [rel, sha] : rec->artifacts) {
    const auto path = root_ / rel;
    if (!std::filesystem::exists(path) || sha256_file(path) != sha) return false;
  }
  return true;
}

void RunLedger::append(const std::string& stage, const std::string& inputs_digest,
                       const std::vector<std::string>& artifacts, double seconds) {
  StageRecord rec{stage, inputs_digest, {}, seconds};
  for (const auto& rel : artifacts) rec.artifacts[rel] = sha256_file(root_ / rel);
  records_.push_back(std::move(rec));
  ordered_json j;
  auto& stages = j["stages"] = ordered_json::array();
  for (const auto& r : records_) {
    ordered_json a = ordered_json::object();
    for (const auto& [k, v] : r.artifacts) a[k] = v;
    stages.push_back({{"stage", r.stage}, {"inputs_digest", r.inputs_digest}, {"artifacts", a},
                      {"seconds", r.seconds}});
  }
  write_file_atomic((root_ / "ledger.json").string(), j.dump(2) + "\n");
}

}  // namespace shiftlab::cli
