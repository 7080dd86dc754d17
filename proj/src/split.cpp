// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "svcgraph/errors.hpp"
#include "svcgraph/rng.hpp"

namespace svcgraph {

std::string_view to_string(SplitKind k) {
  return k == SplitKind::random_stratified ? "random_stratified" : "trial_level";
}

SplitKind parse_split_kind(std::string_view s) {
  if (s == "random_stratified" || s == "random") return SplitKind::random_stratified;
  if (s == "trial_level" || s == "trial") return SplitKind::trial_level;
  throw ConfigError(fmt::format("unknown split kind '{}'", s));
}

void validate(const SplitSpec& spec) {
  if (!(spec.test_size > 0.0 && spec.test_size < 1.0))
    throw ConfigError(fmt::format("test_size must be in (0, 1), got {}", spec.test_size));
}

namespace {

SplitResult random_stratified(std::span<const ClassLabel> labels, const SplitSpec& spec) {
  SplitResult out;
  Rng rng(derive_seed(spec.seed, "split-random"));
  for (ClassLabel c : kAllClasses) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == c) members.push_back(i);
    if (members.empty()) continue;
    rng.shuffle(std::span<std::size_t>(members));
    auto n_test = static_cast<std::size_t>(std::llround(spec.test_size * static_cast<double>(members.size())));
    if (members.size() >= 2) n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    out.test.insert(out.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train.insert(out.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  return out;
}

SplitResult trial_level(std::span<const ClassLabel> labels, std::span<const std::string> run_ids,
                        const SplitSpec& spec) {
  SplitResult out;
  // Runs in first-appearance order with per-class counts.
  std::vector<std::string> runs;
  std::map<std::string, std::size_t> run_index;
  std::vector<std::array<std::size_t, kClassCount>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = run_index.try_emplace(run_ids[i], runs.size());
    if (inserted) {
      runs.push_back(run_ids[i]);
      counts.emplace_back();
    }
    ++counts[it->second][index_of(labels[i])];
  }

  for (ClassLabel c : kAllClasses) {
    std::size_t holders = 0;
    for (const auto& cc : counts) holders += cc[index_of(c)] > 0;
    if (holders == 1)
      out.warnings.push_back(
          fmt::format("class {} occurs in a single run and will be missing from one side", to_string(c)));
  }

  // Group runs by dominant attack class.
  std::array<std::vector<std::size_t>, kClassCount> groups;
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::size_t key = index_of(ClassLabel::normal);
    std::size_t best = 0;
    for (std::size_t c = 0; c < kClassCount; ++c) {
      if (c == index_of(ClassLabel::normal)) continue;
      if (counts[r][c] > best) {
        best = counts[r][c];
        key = c;
      }
    }
    groups[key].push_back(r);
  }

  Rng rng(derive_seed(spec.seed, "split-trial"));
  std::vector<bool> is_test(runs.size(), false);
  for (auto& group : groups) {
    if (group.empty()) continue;
    rng.shuffle(std::span<std::size_t>(group));
    auto size_of = [&](std::size_t r) {
      std::size_t n = 0;
      for (std::size_t v : counts[r]) n += v;
      return static_cast<double>(n);
    };
    double total = 0.0;
    for (std::size_t r : group) total += size_of(r);
    const double target = spec.test_size * total;
    double taken = 0.0;
    std::size_t n_test = 0;
    for (std::size_t r : group) {
      // Keep at least one run on the training side.
      if (n_test + 1 >= group.size() && group.size() >= 2) break;
      const double with = taken + size_of(r);
      const bool first = n_test == 0 && group.size() >= 2;
      if (first || std::abs(with - target) < std::abs(taken - target)) {
        is_test[r] = true;
        taken = with;
        ++n_test;
      }
    }
  }

  std::set<std::string> train_runs, test_runs;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::size_t r = run_index.at(run_ids[i]);
    if (is_test[r]) {
      out.test.push_back(i);
      test_runs.insert(runs[r]);
    } else {
      out.train.push_back(i);
      train_runs.insert(runs[r]);
    }
  }
  for (const auto& r : test_runs)
    if (train_runs.count(r)) throw ContractViolation(fmt::format("run {} appears on both sides of the split", r));
  return out;
}

}  // namespace

SplitResult split(std::span<const ClassLabel> labels, std::span<const std::string> run_ids,
                  const SplitSpec& spec) {
  validate(spec);
  if (labels.empty()) throw ContractViolation("cannot split an empty dataset");
  if (labels.size() != run_ids.size())
    throw ContractViolation(fmt::format("{} labels but {} run ids", labels.size(), run_ids.size()));
  SplitResult out =
      spec.kind == SplitKind::random_stratified ? random_stratified(labels, spec) : trial_level(labels, run_ids, spec);
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

}  // namespace svcgraph
