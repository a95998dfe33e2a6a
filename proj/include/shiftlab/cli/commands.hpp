// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shiftlab/cli/experiment.hpp"
#include "shiftlab/cli/ledger.hpp"

namespace shiftlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitStageFailure = 2;

/// A stage could not complete (missing inputs, I/O, failed sweep).
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One experiment directory bound to a resolved configuration.
class Experiment {
 public:
  Experiment(ExperimentConfig config, unsigned workers, std::ostream& log);

  const ExperimentConfig& config() const { return config_; }
  const std::filesystem::path& root() const { return root_; }
  const RunLedger& ledger() const { return ledger_; }

  /// Each returns the path of its main artifact and runs upstream stages
  /// that are missing or stale.
  std::filesystem::path synth();
  std::filesystem::path baseline();
  std::filesystem::path shadow();
  /// Returns the report path and whether at least one candidate succeeded.
  std::pair<std::filesystem::path, bool> mitigate(const std::optional<std::vector<int>>& angles);
  /// Regenerates every plot from the CSV tables present under reports/.
  std::vector<std::filesystem::path> report();

 private:
  ExperimentConfig config_;
  unsigned workers_;
  std::ostream& log_;
  std::filesystem::path root_;
  RunLedger ledger_;
};

/// Entry point shared by the shiftlab binary and the tests.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shiftlab::cli
