// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Non-graph baselines over flattened request features: a CART random forest
// and a one-hidden-layer MLP.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "svcgraph/graph.hpp"

namespace svcgraph {

// Six per-service slots of width d in canonical service order (zeros for
// absent services), then node count and undirected edge count.
struct FlatSample {
  std::vector<double> features;
  ClassLabel label = ClassLabel::normal;
  std::string run_id;
};

inline std::size_t flat_width(std::size_t node_dim) { return kServiceCount * node_dim + 2; }

// Throws ContractViolation if a service appears twice in the node list.
FlatSample flatten(const RequestGraph& graph);
std::vector<FlatSample> flatten_all(std::span<const RequestGraph> graphs);
// Feature row stored in `service`'s slot.
std::vector<double> slot_features(const FlatSample& sample, Service service, std::size_t node_dim);

struct BaselinePrediction {
  std::vector<std::size_t> labels;
  double latency_us_per_sample = 0.0;
};

// ---- Random forest ----

// Gini impurity of a class-count vector; 0 for an empty node.
double gini(std::span<const double> counts);
// Size-weighted Gini of a binary split.
double split_impurity(std::span<const double> left, std::span<const double> right);

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 0;  // 0 = unlimited
  std::size_t min_leaf = 1;
  std::optional<std::size_t> features_per_split;  // default floor(sqrt(width))
  bool bootstrap = true;
  std::uint64_t seed = 7;
};

struct DecisionTree {
  struct Node {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;     // x <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t label = 0;
  };
  std::vector<Node> nodes;

  std::size_t predict(std::span<const double> x) const;
  std::size_t depth() const;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, std::size_t width, std::size_t classes)
      : trees_(std::move(trees)), width_(width), classes_(classes) {}

  std::size_t predict(std::span<const double> x) const;
  // Same vote, trees visited in the given order.
  std::size_t predict_with_order(std::span<const double> x, std::span<const std::size_t> order) const;
  const std::vector<DecisionTree>& trees() const { return trees_; }
  std::size_t width() const { return width_; }

  nlohmann::ordered_json to_json() const;
  // Throws ParseError on malformed input.
  static RandomForest from_json(const nlohmann::json& j);

 private:
  std::vector<DecisionTree> trees_;
  std::size_t width_ = 0;
  std::size_t classes_ = kClassCount;
};

struct ForestTrainResult {
  RandomForest model;
  double train_seconds = 0.0;
  // Training data held one class only; the forest always predicts it.
  bool single_class = false;
};

ForestTrainResult train_random_forest(std::span<const FlatSample> samples, const ForestConfig& config);

// ---- MLP ----

struct MlpConfig {
  std::size_t hidden = 64;
  int epochs = 50;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 7;
};

struct MlpModel {
  Eigen::VectorXd input_mean;   // standardisation fitted on the training samples
  Eigen::VectorXd input_scale;
  Eigen::MatrixXd W1;  // width x hidden
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;  // hidden x C
  Eigen::VectorXd b2;

  static MlpModel initialize(std::size_t width, std::size_t hidden, std::size_t classes, std::uint64_t seed);
  Eigen::VectorXd standardize(std::span<const double> x) const;
  Eigen::VectorXd logits(std::span<const double> x) const;
  std::size_t width() const { return static_cast<std::size_t>(W1.rows()); }
  nlohmann::ordered_json to_json() const;
  static MlpModel from_json(const nlohmann::json& j);
};

struct MlpGrad {
  double loss = 0.0;
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;
};

MlpGrad mlp_loss_and_grad(const MlpModel& model, std::span<const FlatSample* const> batch);

struct MlpTrainResult {
  MlpModel model;
  std::vector<double> loss_curve;
  double train_seconds = 0.0;
};

// Throws ConfigError (epochs < 1, empty set) or TrainingError (non-finite loss).
MlpTrainResult train_mlp(std::span<const FlatSample> samples, const MlpConfig& config);

// Throws ContractViolation on a width mismatch.
BaselinePrediction predict_baseline(const RandomForest& model, std::span<const FlatSample> samples);
BaselinePrediction predict_baseline(const MlpModel& model, std::span<const FlatSample> samples);

}  // namespace svcgraph
