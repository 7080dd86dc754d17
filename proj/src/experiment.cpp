// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/experiment.hpp"

#include <atomic>
#include <thread>

#include <fmt/format.h>

#include "svcgraph/errors.hpp"

namespace svcgraph {

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gcn:
      return "gcn";
    case ModelKind::forest:
      return "forest";
    case ModelKind::mlp:
      return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "gcn") return ModelKind::gcn;
  if (s == "forest" || s == "random_forest") return ModelKind::forest;
  if (s == "mlp") return ModelKind::mlp;
  throw ConfigError(fmt::format("unknown model '{}'", s));
}

std::string CellSpec::name() const {
  return fmt::format("{}_{}_{}", to_string(model), to_string(split), to_string(modality));
}

std::vector<CellSpec> default_grid() {
  std::vector<CellSpec> cells;
  for (Modality m : kAllModalities) cells.push_back({ModelKind::gcn, m, SplitKind::trial_level});
  cells.push_back({ModelKind::gcn, Modality::logs_plus_metrics, SplitKind::random_stratified});
  for (SplitKind s : {SplitKind::random_stratified, SplitKind::trial_level})
    for (ModelKind k : {ModelKind::forest, ModelKind::mlp}) cells.push_back({k, Modality::logs_plus_metrics, s});
  return cells;
}

void validate(const ExperimentConfig& c) {
  if (c.epochs < 1) throw ConfigError(fmt::format("epochs must be >= 1, got {}", c.epochs));
  if (c.log_dim < 1) throw ConfigError("log_dim must be >= 1");
  if (c.hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
  if (c.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (c.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (c.mlp_epochs < 1) throw ConfigError("mlp_epochs must be >= 1");
  if (c.forest_trees < 1) throw ConfigError("forest_trees must be >= 1");
  validate(SplitSpec{SplitKind::random_stratified, c.test_size, c.seed});
}

ExperimentRunner::ExperimentRunner(const Corpus& corpus, ExperimentConfig config)
    : corpus_(corpus), config_(std::move(config)) {
  validate(config_);
}

const SplitResult& ExperimentRunner::split_for(SplitKind kind) {
  auto it = splits_.find(kind);
  if (it == splits_.end()) {
    const auto labels = corpus_.labels();
    const auto runs = corpus_.run_ids();
    it = splits_.emplace(kind, split(labels, runs, SplitSpec{kind, config_.test_size, config_.seed})).first;
  }
  return it->second;
}

const Dataset& ExperimentRunner::dataset_for(SplitKind kind, Modality modality) {
  const auto key = std::make_pair(kind, modality);
  auto it = datasets_.find(key);
  if (it == datasets_.end()) {
    const SplitResult& s = split_for(kind);
    auto d = std::make_unique<Dataset>(
        assemble_dataset(corpus_, ModalityConfig{modality, config_.log_dim}, s.train));
    it = datasets_.emplace(key, std::move(d)).first;
  }
  return *it->second;
}

void ExperimentRunner::prepare(std::span<const CellSpec> cells) {
  for (const auto& c : cells) dataset_for(c.split, c.modality);
}

namespace {

template <typename T>
std::vector<T> pick(const std::vector<T>& all, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}

std::vector<std::size_t> label_indices(std::span<const RequestGraph> graphs) {
  std::vector<std::size_t> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(index_of(g.label));
  return out;
}

void finish(CellResult& r, std::span<const RequestGraph> test_graphs, std::span<const std::size_t> truth,
            std::span<const std::size_t> predicted) {
  r.metrics = compute_metrics(truth, predicted);
  for (std::size_t i = 0; i < test_graphs.size(); ++i) {
    if (truth[i] == predicted[i]) continue;
    const auto& g = test_graphs[i];
    r.misclassified.push_back(
        {g.graph_id, g.run_id, g.nodes, g.undirected_edge_count(), g.label, kAllClasses[predicted[i]]});
  }
}

}  // namespace

CellResult ExperimentRunner::run_cell_or_throw(const CellSpec& cell) {
  const SplitResult& s = split_for(cell.split);
  const Dataset& d = dataset_for(cell.split, cell.modality);
  CellResult r;
  r.cell = cell;
  r.warnings = s.warnings;
  if (d.short_vocabulary)
    r.warnings.push_back(fmt::format("log vocabulary has fewer than {} tokens; padded with zeros", config_.log_dim));
  const auto train_graphs = pick(d.graphs, s.train);
  const auto test_graphs = pick(d.graphs, s.test);
  r.train_size = train_graphs.size();
  r.test_size = test_graphs.size();
  if (train_graphs.empty() || test_graphs.empty())
    throw Error(fmt::format("split left {} train and {} test graphs", r.train_size, r.test_size));
  const auto truth = label_indices(test_graphs);
  std::vector<std::size_t> predicted;

  switch (cell.model) {
    case ModelKind::gcn: {
      TrainConfig tc;
      tc.epochs = config_.epochs;
      tc.learning_rate = config_.learning_rate;
      tc.batch_size = config_.batch_size;
      tc.seed = config_.seed;
      const auto width = static_cast<std::size_t>(train_graphs.front().features.cols());
      GcnTrainResult trained =
          train(GcnModel::initialize(width, config_.hidden_dim, kClassCount, config_.seed), train_graphs, tc);
      Prediction p = predict(trained.model, test_graphs);
      predicted = p.labels;
      r.loss_curve = trained.loss_curve;
      r.train_seconds = trained.train_seconds;
      r.predict_ms_per_graph = p.latency_us_per_graph / 1000.0;
      r.test_logits = std::move(p.logits);
      r.test_labels = truth;
      r.checkpoint = trained.model.to_json();
      break;
    }
    case ModelKind::forest: {
      const auto train_flat = flatten_all(train_graphs);
      const auto test_flat = flatten_all(test_graphs);
      ForestConfig fc;
      fc.n_trees = config_.forest_trees;
      fc.seed = config_.seed;
      ForestTrainResult trained = train_random_forest(train_flat, fc);
      if (trained.single_class) r.warnings.push_back("training set holds a single class; forest is degenerate");
      BaselinePrediction p = predict_baseline(trained.model, test_flat);
      predicted = p.labels;
      r.train_seconds = trained.train_seconds;
      r.predict_ms_per_graph = p.latency_us_per_sample / 1000.0;
      r.checkpoint = trained.model.to_json();
      break;
    }
    case ModelKind::mlp: {
      const auto train_flat = flatten_all(train_graphs);
      const auto test_flat = flatten_all(test_graphs);
      MlpConfig mc;
      mc.hidden = config_.mlp_hidden;
      mc.epochs = config_.mlp_epochs;
      mc.learning_rate = config_.learning_rate;
      mc.batch_size = config_.batch_size;
      mc.seed = config_.seed;
      MlpTrainResult trained = train_mlp(train_flat, mc);
      BaselinePrediction p = predict_baseline(trained.model, test_flat);
      predicted = p.labels;
      r.loss_curve = trained.loss_curve;
      r.train_seconds = trained.train_seconds;
      r.predict_ms_per_graph = p.latency_us_per_sample / 1000.0;
      r.checkpoint = trained.model.to_json();
      break;
    }
  }

  finish(r, test_graphs, truth, predicted);
  return r;
}

CellResult ExperimentRunner::evaluate_checkpoint(const CellSpec& cell, const nlohmann::json& checkpoint) {
  const SplitResult& s = split_for(cell.split);
  const Dataset& d = dataset_for(cell.split, cell.modality);
  CellResult r;
  r.cell = cell;
  r.warnings = s.warnings;
  r.train_size = s.train.size();
  const auto test_graphs = pick(d.graphs, s.test);
  r.test_size = test_graphs.size();
  const auto truth = label_indices(test_graphs);
  std::vector<std::size_t> predicted;
  switch (cell.model) {
    case ModelKind::gcn: {
      const GcnModel model = GcnModel::from_json(checkpoint);
      Prediction p = predict(model, test_graphs);
      predicted = p.labels;
      r.predict_ms_per_graph = p.latency_us_per_graph / 1000.0;
      r.test_logits = std::move(p.logits);
      r.test_labels = truth;
      break;
    }
    case ModelKind::forest: {
      const BaselinePrediction p = predict_baseline(RandomForest::from_json(checkpoint), flatten_all(test_graphs));
      predicted = p.labels;
      r.predict_ms_per_graph = p.latency_us_per_sample / 1000.0;
      break;
    }
    case ModelKind::mlp: {
      const BaselinePrediction p = predict_baseline(MlpModel::from_json(checkpoint), flatten_all(test_graphs));
      predicted = p.labels;
      r.predict_ms_per_graph = p.latency_us_per_sample / 1000.0;
      break;
    }
  }
  r.checkpoint = checkpoint;
  finish(r, test_graphs, truth, predicted);
  return r;
}

CellResult ExperimentRunner::run_cell(const CellSpec& cell) {
  try {
    return run_cell_or_throw(cell);
  } catch (const std::exception& e) {
    CellResult r;
    r.cell = cell;
    r.error = e.what();
    return r;
  }
}

std::vector<CellResult> run_experiment_matrix(const Corpus& corpus, std::span<const CellSpec> cells,
                                              const ExperimentConfig& config) {
  ExperimentRunner runner(corpus, config);
  std::vector<CellResult> out(cells.size());
  // Shared state is built up front so cells only read it.
  bool prepared = true;
  try {
    runner.prepare(cells);
  } catch (const std::exception&) {
    // Each affected cell records the failure itself, sequentially.
    prepared = false;
  }
  const std::size_t workers = prepared ? std::min(config.jobs, cells.size()) : 1;
  if (workers <= 1) {
    for (std::size_t i = 0; i < cells.size(); ++i) out[i] = runner.run_cell(cells[i]);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) out[i] = runner.run_cell(cells[i]);
    });
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace svcgraph
