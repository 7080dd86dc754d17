// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// The split x model x modality experiment grid.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "svcgraph/baselines.hpp"
#include "svcgraph/gcn.hpp"
#include "svcgraph/graph.hpp"
#include "svcgraph/metrics.hpp"
#include "svcgraph/split.hpp"

namespace svcgraph {

enum class ModelKind { gcn, forest, mlp };
std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

struct CellSpec {
  ModelKind model = ModelKind::gcn;
  Modality modality = Modality::logs_plus_metrics;
  SplitKind split = SplitKind::trial_level;

  // e.g. "gcn_trial_level_logs_plus_metrics"
  std::string name() const;
  bool operator==(const CellSpec&) const = default;
};

// Four GCN modality cells under the trial-level split, the GCN logs+metrics
// cell under the random split, and forest/MLP on logs+metrics under both.
std::vector<CellSpec> default_grid();

struct ExperimentConfig {
  int epochs = 5;
  std::size_t log_dim = 16;
  std::size_t hidden_dim = 32;
  double test_size = 0.3;
  std::uint64_t seed = 7;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::size_t forest_trees = 100;
  std::size_t mlp_hidden = 64;
  int mlp_epochs = 50;
  std::size_t jobs = 1;
};

void validate(const ExperimentConfig& config);

struct MisclassifiedGraph {
  std::string graph_id;
  std::string run_id;
  std::vector<Service> nodes;
  std::size_t edge_count = 0;
  ClassLabel truth = ClassLabel::normal;
  ClassLabel predicted = ClassLabel::normal;
};

struct CellResult {
  CellSpec cell;
  std::optional<std::string> error;  // set when the cell failed
  MetricsCore metrics;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
  std::vector<double> loss_curve;
  std::vector<std::string> warnings;
  // Test-set logits and true labels; GCN cells only.
  Eigen::MatrixXd test_logits;
  std::vector<std::size_t> test_labels;
  std::vector<MisclassifiedGraph> misclassified;
  nlohmann::ordered_json checkpoint;
  // Wall-clock measurements; kept apart from everything else so the rest of
  // the output stays byte-reproducible.
  double train_seconds = 0.0;
  double predict_ms_per_graph = 0.0;

  bool ok() const { return !error.has_value(); }
};

// Caches one split per kind and one dataset per (split, modality).
class ExperimentRunner {
 public:
  ExperimentRunner(const Corpus& corpus, ExperimentConfig config);

  const SplitResult& split_for(SplitKind kind);
  const Dataset& dataset_for(SplitKind kind, Modality modality);
  // Builds everything `cells` need; called before running cells in parallel.
  void prepare(std::span<const CellSpec> cells);
  // Exceptions are caught and stored in CellResult::error.
  CellResult run_cell(const CellSpec& cell);
  // Scores a saved model on the cell's test side. Throws on any failure.
  CellResult evaluate_checkpoint(const CellSpec& cell, const nlohmann::json& checkpoint);

 private:
  CellResult run_cell_or_throw(const CellSpec& cell);

  const Corpus& corpus_;
  ExperimentConfig config_;
  std::map<SplitKind, SplitResult> splits_;
  std::map<std::pair<SplitKind, Modality>, std::unique_ptr<Dataset>> datasets_;
};

// Runs every cell; failures are recorded and the remaining cells continue.
// With config.jobs > 1 cells run on a small thread pool.
std::vector<CellResult> run_experiment_matrix(const Corpus& corpus, std::span<const CellSpec> cells,
                                              const ExperimentConfig& config);

}  // namespace svcgraph
