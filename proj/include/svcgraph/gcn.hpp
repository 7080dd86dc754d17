// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Two-layer graph convolutional request classifier:
//
//   H1  = ReLU(Â X W1)
//   H2  = ReLU(Â H1 W2)
//   h_G = mean over nodes of H2
//   logits = W_b^T ReLU(W_a^T h_G + b_a) + b_b
//
// with Â = D^-1/2 (A + I) D^-1/2. Trained with softmax cross-entropy and Adam;
// gradients are derived by hand.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "svcgraph/graph.hpp"
#include "svcgraph/optim.hpp"

namespace svcgraph {

Eigen::MatrixXd normalize_adjacency(std::size_t node_count, const EdgeList& edges);

struct GcnModel {
  Eigen::MatrixXd W1;       // d x h
  Eigen::MatrixXd W2;       // h x h
  Eigen::MatrixXd head_W1;  // h x h
  Eigen::VectorXd head_b1;  // h
  Eigen::MatrixXd head_W2;  // h x C
  Eigen::VectorXd head_b2;  // C
  std::uint64_t seed = 0;

  // Glorot-uniform weights, zero biases.
  static GcnModel initialize(std::size_t input_dim, std::size_t hidden = 32,
                             std::size_t classes = kClassCount, std::uint64_t seed = 7);
  // Same shapes, all zeros. Used as a gradient accumulator.
  static GcnModel zeros_like(const GcnModel& other);

  std::size_t input_dim() const { return static_cast<std::size_t>(W1.rows()); }
  std::size_t hidden() const { return static_cast<std::size_t>(W1.cols()); }
  std::size_t classes() const { return static_cast<std::size_t>(head_W2.cols()); }

  std::vector<ParamRef> param_refs(const GcnModel& grads);
  bool all_finite() const;
  // Frobenius norms of the six tensors in declaration order.
  std::vector<double> tensor_norms() const;

  nlohmann::ordered_json to_json() const;
  static GcnModel from_json(const nlohmann::json& j);
  bool operator==(const GcnModel& other) const;
};

struct GcnCache {
  Eigen::MatrixXd a_hat, ax, z1, h1, ah1, z2, h2;
  Eigen::VectorXd pooled, head_pre, head_act;
};

struct GcnForward {
  Eigen::VectorXd logits;
  Eigen::VectorXd pooled;
  GcnCache cache;
};

// Throws ContractViolation if the graph's feature width differs from the model.
GcnForward forward(const GcnModel& model, const RequestGraph& graph);

struct LossAndGrad {
  double loss = 0.0;
  GcnModel grad;
};

// Mean (optionally class-weighted: sum w_y * ce / sum w_y) softmax
// cross-entropy over the batch, with gradients for all six tensors.
LossAndGrad loss_and_grad(const GcnModel& model, std::span<const RequestGraph* const> batch,
                          std::span<const std::size_t> labels,
                          const std::vector<double>* class_weights = nullptr);

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  std::uint64_t seed = 7;
  std::optional<std::vector<double>> class_weights;
};

void validate(const TrainConfig& config);

// Weights n / (k * n_c) over the k classes present; absent classes get 0.
std::vector<double> inverse_class_frequency(std::span<const std::size_t> labels,
                                            std::size_t classes = kClassCount);

struct GcnTrainResult {
  GcnModel model;
  std::vector<double> loss_curve;
  double train_seconds = 0.0;
};

// Throws ConfigError for invalid configs and TrainingError on a non-finite loss.
GcnTrainResult train(GcnModel model, std::span<const RequestGraph> graphs, const TrainConfig& config);

struct Prediction {
  std::vector<std::size_t> labels;
  Eigen::MatrixXd logits;  // N x C
  double latency_us_per_graph = 0.0;
};

// Lowest index wins ties.
std::size_t argmax(const Eigen::VectorXd& v);

Prediction predict(const GcnModel& model, std::span<const RequestGraph> graphs);

}  // namespace svcgraph
