// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/gcn.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "svcgraph/errors.hpp"
#include "svcgraph/rng.hpp"

namespace svcgraph {

namespace {

Eigen::MatrixXd glorot(Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Eigen::MatrixXd m(fan_in, fan_out);
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index j = 0; j < fan_out; ++j)
    for (Eigen::Index i = 0; i < fan_in; ++i) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

nlohmann::ordered_json matrix_json(const Eigen::MatrixXd& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double mx = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
  return e / e.sum();
}

}  // namespace

Eigen::MatrixXd normalize_adjacency(std::size_t node_count, const EdgeList& edges) {
  const auto n = static_cast<Eigen::Index>(node_count);
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (const auto& [i, j] : edges) {
    if (i >= node_count || j >= node_count)
      throw ContractViolation("edge endpoint out of range");
    if (i == j) continue;
    a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  }
  const Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().array().rsqrt().matrix();
  return inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal();
}

GcnModel GcnModel::initialize(std::size_t input_dim, std::size_t hidden, std::size_t classes,
                              std::uint64_t seed) {
  if (input_dim == 0 || hidden == 0 || classes == 0)
    throw ConfigError("GCN dimensions must be positive");
  Rng rng(derive_seed(seed, "gcn-init"));
  const auto d = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto c = static_cast<Eigen::Index>(classes);
  GcnModel m;
  m.W1 = glorot(rng, d, h);
  m.W2 = glorot(rng, h, h);
  m.head_W1 = glorot(rng, h, h);
  m.head_b1 = Eigen::VectorXd::Zero(h);
  m.head_W2 = glorot(rng, h, c);
  m.head_b2 = Eigen::VectorXd::Zero(c);
  m.seed = seed;
  return m;
}

GcnModel GcnModel::zeros_like(const GcnModel& o) {
  GcnModel m;
  m.W1 = Eigen::MatrixXd::Zero(o.W1.rows(), o.W1.cols());
  m.W2 = Eigen::MatrixXd::Zero(o.W2.rows(), o.W2.cols());
  m.head_W1 = Eigen::MatrixXd::Zero(o.head_W1.rows(), o.head_W1.cols());
  m.head_b1 = Eigen::VectorXd::Zero(o.head_b1.size());
  m.head_W2 = Eigen::MatrixXd::Zero(o.head_W2.rows(), o.head_W2.cols());
  m.head_b2 = Eigen::VectorXd::Zero(o.head_b2.size());
  m.seed = o.seed;
  return m;
}

std::vector<ParamRef> GcnModel::param_refs(const GcnModel& g) {
  return {param_ref(W1, g.W1),         param_ref(W2, g.W2),           param_ref(head_W1, g.head_W1),
          param_ref(head_b1, g.head_b1), param_ref(head_W2, g.head_W2), param_ref(head_b2, g.head_b2)};
}

bool GcnModel::all_finite() const {
  return W1.allFinite() && W2.allFinite() && head_W1.allFinite() && head_b1.allFinite() &&
         head_W2.allFinite() && head_b2.allFinite();
}

std::vector<double> GcnModel::tensor_norms() const {
  return {W1.norm(), W2.norm(), head_W1.norm(), head_b1.norm(), head_W2.norm(), head_b2.norm()};
}

nlohmann::ordered_json GcnModel::to_json() const {
  nlohmann::ordered_json j;
  j["input_dim"] = input_dim();
  j["hidden"] = hidden();
  j["classes"] = classes();
  j["seed"] = seed;
  j["W1"] = matrix_json(W1);
  j["W2"] = matrix_json(W2);
  j["head_W1"] = matrix_json(head_W1);
  j["head_b1"] = std::vector<double>(head_b1.data(), head_b1.data() + head_b1.size());
  j["head_W2"] = matrix_json(head_W2);
  j["head_b2"] = std::vector<double>(head_b2.data(), head_b2.data() + head_b2.size());
  return j;
}

GcnModel GcnModel::from_json(const nlohmann::json& j) {
  GcnModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.W1 = matrix_from_json(j.at("W1"));
  m.W2 = matrix_from_json(j.at("W2"));
  m.head_W1 = matrix_from_json(j.at("head_W1"));
  m.head_b1 = vector_from_json(j.at("head_b1"));
  m.head_W2 = matrix_from_json(j.at("head_W2"));
  m.head_b2 = vector_from_json(j.at("head_b2"));
  return m;
}

bool GcnModel::operator==(const GcnModel& o) const {
  return W1 == o.W1 && W2 == o.W2 && head_W1 == o.head_W1 && head_b1 == o.head_b1 &&
         head_W2 == o.head_W2 && head_b2 == o.head_b2 && seed == o.seed;
}

GcnForward forward(const GcnModel& model, const RequestGraph& graph) {
  if (static_cast<std::size_t>(graph.features.cols()) != model.input_dim() ||
      static_cast<std::size_t>(graph.features.rows()) != graph.nodes.size())
    throw ContractViolation(fmt::format("graph {} has a {}x{} feature matrix, model expects width {}",
                                        graph.graph_id, graph.features.rows(), graph.features.cols(),
                                        model.input_dim()));
  if (graph.nodes.empty()) throw ContractViolation("graph has no nodes");
  GcnForward out;
  GcnCache& c = out.cache;
  c.a_hat = normalize_adjacency(graph.nodes.size(), graph.edges);
  c.ax = c.a_hat * graph.features;
  c.z1 = c.ax * model.W1;
  c.h1 = c.z1.cwiseMax(0.0);
  c.ah1 = c.a_hat * c.h1;
  c.z2 = c.ah1 * model.W2;
  c.h2 = c.z2.cwiseMax(0.0);
  c.pooled = c.h2.colwise().mean().transpose();
  c.head_pre = model.head_W1.transpose() * c.pooled + model.head_b1;
  c.head_act = c.head_pre.cwiseMax(0.0);
  out.logits = model.head_W2.transpose() * c.head_act + model.head_b2;
  out.pooled = c.pooled;
  return out;
}

LossAndGrad loss_and_grad(const GcnModel& model, std::span<const RequestGraph* const> batch,
                          std::span<const std::size_t> labels, const std::vector<double>* class_weights) {
  if (batch.empty()) throw ContractViolation("loss_and_grad needs a nonempty batch");
  if (labels.size() != batch.size()) throw ContractViolation("labels and batch differ in length");
  const std::size_t classes = model.classes();
  if (class_weights && class_weights->size() != classes)
    throw ContractViolation("class_weights must have one entry per class");

  double weight_sum = 0.0;
  for (std::size_t y : labels) {
    if (y >= classes) throw ContractViolation(fmt::format("label {} outside [0, {})", y, classes));
    weight_sum += class_weights ? (*class_weights)[y] : 1.0;
  }
  if (!(weight_sum > 0.0)) throw ContractViolation("class weights sum to zero over the batch");

  LossAndGrad out;
  out.grad = GcnModel::zeros_like(model);
  GcnModel& g = out.grad;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::size_t y = labels[b];
    const double w = (class_weights ? (*class_weights)[y] : 1.0) / weight_sum;
    GcnForward f = forward(model, *batch[b]);
    const GcnCache& c = f.cache;
    const Eigen::VectorXd p = softmax(f.logits);
    const double mx = f.logits.maxCoeff();
    const double log_z = mx + std::log((f.logits.array() - mx).exp().sum());
    out.loss += w * (log_z - f.logits(static_cast<Eigen::Index>(y)));

    Eigen::VectorXd d_logits = p;
    d_logits(static_cast<Eigen::Index>(y)) -= 1.0;
    d_logits *= w;

    g.head_W2.noalias() += c.head_act * d_logits.transpose();
    g.head_b2 += d_logits;
    const Eigen::VectorXd d_pre =
        ((model.head_W2 * d_logits).array() * (c.head_pre.array() > 0.0).cast<double>()).matrix();
    g.head_W1.noalias() += c.pooled * d_pre.transpose();
    g.head_b1 += d_pre;
    const Eigen::VectorXd d_pooled = model.head_W1 * d_pre;

    const double inv_n = 1.0 / static_cast<double>(c.h2.rows());
    Eigen::MatrixXd d_z2 = (c.z2.array() > 0.0).cast<double>().matrix();
    d_z2.array().rowwise() *= (inv_n * d_pooled).transpose().array();
    g.W2.noalias() += c.ah1.transpose() * d_z2;
    // Â is symmetric, so Â^T = Â.
    const Eigen::MatrixXd d_h1 = c.a_hat * (d_z2 * model.W2.transpose());
    const Eigen::MatrixXd d_z1 = (d_h1.array() * (c.z1.array() > 0.0).cast<double>()).matrix();
    g.W1.noalias() += c.ax.transpose() * d_z1;
  }
  return out;
}

void validate(const TrainConfig& config) {
  if (config.epochs < 1) throw ConfigError(fmt::format("epochs must be >= 1, got {}", config.epochs));
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
}

std::vector<double> inverse_class_frequency(std::span<const std::size_t> labels, std::size_t classes) {
  std::vector<double> counts(classes, 0.0);
  for (std::size_t y : labels) counts.at(y) += 1.0;
  const double present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }));
  std::vector<double> w(classes, 0.0);
  for (std::size_t c = 0; c < classes; ++c)
    if (counts[c] > 0) w[c] = static_cast<double>(labels.size()) / (present * counts[c]);
  return w;
}

GcnTrainResult train(GcnModel model, std::span<const RequestGraph> graphs, const TrainConfig& config) {
  validate(config);
  if (graphs.empty()) throw ConfigError("training set is empty");
  const auto t_start = std::chrono::steady_clock::now();

  Rng rng(derive_seed(config.seed, "gcn-shuffle"));
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  const std::vector<double>* weights = config.class_weights ? &*config.class_weights : nullptr;

  Adam adam(config.learning_rate);
  GcnTrainResult result;
  std::vector<const RequestGraph*> batch;
  std::vector<std::size_t> labels;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      labels.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&graphs[order[k]]);
        labels.push_back(index_of(graphs[order[k]].label));
      }
      LossAndGrad lg = loss_and_grad(model, batch, labels, weights);
      if (!std::isfinite(lg.loss))
        throw TrainingError(fmt::format("non-finite loss at epoch {} batch {}; parameter norms [{}]",
                                        epoch + 1, batch_no, fmt::join(model.tensor_norms(), ", ")));
      const auto refs = model.param_refs(lg.grad);
      adam.step(refs);
      epoch_loss += lg.loss * static_cast<double>(end - start);
    }
    result.loss_curve.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  result.model = std::move(model);
  return result;
}

std::size_t argmax(const Eigen::VectorXd& v) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  return best;
}

Prediction predict(const GcnModel& model, std::span<const RequestGraph> graphs) {
  Prediction p;
  p.logits = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(graphs.size()),
                                   static_cast<Eigen::Index>(model.classes()));
  p.labels.reserve(graphs.size());
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const Eigen::VectorXd logits = forward(model, graphs[i]).logits;
    p.logits.row(static_cast<Eigen::Index>(i)) = logits.transpose();
    p.labels.push_back(argmax(logits));
  }
  const double us = std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  p.latency_us_per_graph = graphs.empty() ? 0.0 : us / static_cast<double>(graphs.size());
  return p;
}

}  // namespace svcgraph
