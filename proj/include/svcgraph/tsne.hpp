// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Exact t-SNE for small sets of logit vectors.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace svcgraph {

struct TsneConfig {
  std::size_t sample_cap = 2000;
  double perplexity = 30.0;
  int iterations = 500;
  double learning_rate = 0.0;  // <= 0: max(n / exaggeration / 4, 50)
  int exaggeration_iters = 100;
  double exaggeration = 12.0;
  int momentum_switch = 250;  // 0.5 before, 0.8 from here on
  std::uint64_t seed = 7;
};

struct TsnePoint {
  double x = 0.0;
  double y = 0.0;
  std::size_t label = 0;
  std::size_t source = 0;  // row in the input matrix
};

// Rows whose index is kept by a per-class proportional subsample of at most
// `cap` rows. Ascending.
std::vector<std::size_t> stratified_subsample(std::span<const std::size_t> labels, std::size_t cap,
                                              std::uint64_t seed);

// Conditional affinities P(j|i) with each row's bandwidth searched so its
// perplexity matches `perplexity`. Exposed for testing.
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& points, double perplexity);

// Throws ContractViolation below 10 samples and ConfigError when perplexity
// is at least a third of the (subsampled) sample count.
std::vector<TsnePoint> project_logits_2d(const Eigen::MatrixXd& points, std::span<const std::size_t> labels,
                                         const TsneConfig& config = {});

}  // namespace svcgraph
