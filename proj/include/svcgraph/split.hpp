// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svcgraph/telemetry.hpp"

namespace svcgraph {

enum class SplitKind { random_stratified, trial_level };

std::string_view to_string(SplitKind k);
SplitKind parse_split_kind(std::string_view s);  // ConfigError on unknown names

struct SplitSpec {
  SplitKind kind = SplitKind::random_stratified;
  double test_size = 0.3;
  std::uint64_t seed = 7;
};

// Throws ConfigError unless 0 < test_size < 1.
void validate(const SplitSpec& spec);

struct SplitResult {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
  std::vector<std::string> warnings;
};

// Random: per-class shuffle, round(test_size * support) to test, clamped so
// that classes with support >= 2 land on both sides.
//
// Trial-level: each run is keyed by its dominant attack class (normal if it
// has none). Within each key, runs are shuffled and added to test while doing
// so moves the key's test share closer to test_size. Every graph of a run
// stays on one side; overlapping run sets throw ContractViolation.
SplitResult split(std::span<const ClassLabel> labels, std::span<const std::string> run_ids,
                  const SplitSpec& spec);

}  // namespace svcgraph
