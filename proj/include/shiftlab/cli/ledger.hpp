// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace shiftlab::cli {

struct StageRecord {
  std::string stage;
  std::string inputs_digest;
  std::map<std::string, std::string> artifacts;  // path relative to the experiment dir -> sha256
  double seconds = 0;
};

/// Append-only record of completed stages, stored as ledger.json.
class RunLedger {
 public:
  explicit RunLedger(std::filesystem::path root);

  /// True when the latest record for `stage` has this inputs digest and
  /// every recorded artifact still hashes to its recorded value.
  bool up_to_date(const std::string& stage, const std::string& inputs_digest) const;

  std::optional<StageRecord> latest(const std::string& stage) const;
  const std::vector<StageRecord>& records() const { return records_; }

  /// Hashes the artifacts, appends the record and rewrites ledger.json.
  void append(const std::string& stage, const std::string& inputs_digest, const std::vector<std::string>& artifacts,
              double seconds);

 private:
  std::filesystem::path root_;
  std::vector<StageRecord> records_;
};

}  // namespace shiftlab::cli
