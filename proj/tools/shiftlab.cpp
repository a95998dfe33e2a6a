// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>
#include <string>
#include <vector>

#include "shiftlab/cli/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return shiftlab::cli::run_cli(args, std::cout, std::cerr);
}
