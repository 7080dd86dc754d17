// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace svcgraph::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kUsageError = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Every long flag of every subcommand, e.g. "--run-spec-file", sorted and unique.
std::vector<std::string> flag_names();
// Top-level help followed by the help of each subcommand.
std::string help_text();

}  // namespace svcgraph::cli
