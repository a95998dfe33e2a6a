// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace shiftlab {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);
std::string format_float(float v);

/// Parses a double written by format_double (or any plain decimal).
double parse_double(std::string_view text);

long long parse_int(std::string_view text);

std::vector<std::string> split(std::string_view text, char sep);

/// Writes `contents` to `path` via a temporary file and rename.
void write_file_atomic(const std::string& path, std::string_view contents);

std::string read_file(const std::string& path);

}  // namespace shiftlab
