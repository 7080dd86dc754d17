// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "svcgraph/telemetry.hpp"

namespace svcgraph {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct MetricsCore {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  double macro_f1 = 0.0;     // unweighted mean over the whole class set
  double weighted_f1 = 0.0;  // support-weighted mean
  std::vector<std::vector<std::size_t>> confusion;  // rows true, columns predicted

  std::vector<double> recalls() const;
};

// 0/0 is taken as 0 for precision, recall and F1. Throws ContractViolation on
// a length mismatch or a label >= classes.
MetricsCore compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                            std::size_t classes = kClassCount);

}  // namespace svcgraph
