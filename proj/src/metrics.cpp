// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/metrics.hpp"

#include <fmt/format.h>

#include "svcgraph/errors.hpp"

namespace svcgraph {

namespace {

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

std::vector<double> MetricsCore::recalls() const {
  std::vector<double> r;
  for (const auto& m : per_class) r.push_back(m.recall);
  return r;
}

MetricsCore compute_metrics(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                            std::size_t classes) {
  if (truth.size() != predicted.size())
    throw ContractViolation(fmt::format("{} true labels but {} predictions", truth.size(), predicted.size()));
  MetricsCore m;
  m.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes || predicted[i] >= classes)
      throw ContractViolation(fmt::format("label outside the class set at position {}", i));
    ++m.confusion[truth[i]][predicted[i]];
    correct += truth[i] == predicted[i];
  }
  m.accuracy = ratio(static_cast<double>(correct), static_cast<double>(truth.size()));

  double macro = 0.0, weighted = 0.0;
  for (std::size_t c = 0; c < classes; ++c) {
    std::size_t tp = m.confusion[c][c], row = 0, col = 0;
    for (std::size_t k = 0; k < classes; ++k) {
      row += m.confusion[c][k];
      col += m.confusion[k][c];
    }
    ClassMetrics cm;
    cm.support = row;
    cm.precision = ratio(static_cast<double>(tp), static_cast<double>(col));
    cm.recall = ratio(static_cast<double>(tp), static_cast<double>(row));
    cm.f1 = ratio(2.0 * cm.precision * cm.recall, cm.precision + cm.recall);
    macro += cm.f1;
    weighted += cm.f1 * static_cast<double>(row);
    m.per_class.push_back(cm);
  }
  m.macro_f1 = classes ? macro / static_cast<double>(classes) : 0.0;
  m.weighted_f1 = ratio(weighted, static_cast<double>(truth.size()));
  return m;
}

}  // namespace svcgraph
