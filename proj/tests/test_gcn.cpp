// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "svcgraph/errors.hpp"
#include "svcgraph/gcn.hpp"

using namespace svcgraph;
using namespace svcgraph::testing;

namespace {

RequestGraph graph_of(std::size_t n, EdgeList edges, Eigen::MatrixXd x) {
  RequestGraph g;
  g.nodes.assign(kAllServices.begin(), kAllServices.begin() + static_cast<std::ptrdiff_t>(n));
  g.edges = std::move(edges);
  g.features = std::move(x);
  return g;
}

std::vector<const RequestGraph*> pointers(const std::vector<RequestGraph>& gs) {
  std::vector<const RequestGraph*> out;
  for (const auto& g : gs) out.push_back(&g);
  return out;
}

std::vector<std::size_t> labels_of(const std::vector<RequestGraph>& gs) {
  std::vector<std::size_t> out;
  for (const auto& g : gs) out.push_back(index_of(g.label));
  return out;
}

}  // namespace

TEST_CASE("normalize_adjacency hand cases") {
  const auto one = normalize_adjacency(1, {});
  CHECK(one.rows() == 1);
  CHECK(std::abs(one(0, 0) - 1.0) < 1e-12);

  const auto two = normalize_adjacency(2, {{0, 1}, {1, 0}});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(two(i, j) - 0.5) < 1e-12);

  const auto path = normalize_adjacency(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}});
  CHECK(std::abs(path(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(path(1, 1) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(path(2, 2) - 0.5) < 1e-12);
  CHECK(std::abs(path(0, 1) - 1.0 / std::sqrt(6.0)) < 1e-12);
  CHECK(std::abs(path(1, 2) - 0.40824829046386301637) < 1e-12);
  CHECK(path(0, 2) == 0.0);

  CHECK_THROWS_AS(normalize_adjacency(2, {{0, 5}}), ContractViolation);
}

TEST_CASE("normalize_adjacency is symmetric and matches the entrywise oracle") {
  Rng rng(77);
  for (int t = 0; t < 1000; ++t) {
    const auto g = random_graph(rng, 1);
    const auto a = normalize_adjacency(g.nodes.size(), g.edges);
    const auto ref = oracle::normalized_adjacency(g.nodes.size(), {g.edges.begin(), g.edges.end()});
    CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      for (std::size_t j = 0; j < g.nodes.size(); ++j)
        CHECK(std::abs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - ref[i][j]) < 1e-12);
  }
}

TEST_CASE("initialisation") {
  const auto m = GcnModel::initialize(25, 32, 6, 7);
  CHECK(m.W1.rows() == 25);
  CHECK(m.W1.cols() == 32);
  CHECK(m.head_W2.cols() == 6);
  CHECK(m.head_b1.isZero(0.0));
  CHECK(m.head_b2.isZero(0.0));
  const double bound = std::sqrt(6.0 / (25.0 + 32.0));
  CHECK(m.W1.cwiseAbs().maxCoeff() <= bound);
  CHECK(m.W1.cwiseAbs().maxCoeff() > 0.5 * bound);
  CHECK(GcnModel::initialize(25, 32, 6, 7) == m);
  CHECK_FALSE(GcnModel::initialize(25, 32, 6, 8) == m);
  CHECK_THROWS_AS(GcnModel::initialize(0, 32, 6, 7), ConfigError);

  const auto back = GcnModel::from_json(m.to_json());
  CHECK(back == m);
}

TEST_CASE("forward") {
  Rng rng(1);
  SUBCASE("zero features give head_b2") {
    auto m = GcnModel::initialize(4, 8, 6, 3);
    for (int c = 0; c < 6; ++c) m.head_b2(c) = 0.1 * c;
    const auto f = forward(m, graph_of(3, {{0, 1}, {1, 0}}, Eigen::MatrixXd::Zero(3, 4)));
    CHECK(f.pooled.isZero(0.0));
    CHECK((f.logits - m.head_b2).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("regular graph with identical rows collapses") {
    const auto m = GcnModel::initialize(4, 8, 6, 3);
    Eigen::MatrixXd x(3, 4);
    x.rowwise() = Eigen::RowVector4d(0.3, -0.2, 0.9, 0.4);
    const auto f = forward(m, graph_of(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}, {0, 2}, {2, 0}}, x));
    for (int i = 1; i < 3; ++i) {
      CHECK((f.cache.h1.row(i) - f.cache.h1.row(0)).cwiseAbs().maxCoeff() < 1e-14);
      CHECK((f.cache.h2.row(i) - f.cache.h2.row(0)).cwiseAbs().maxCoeff() < 1e-14);
    }
    CHECK((f.pooled.transpose() - f.cache.h2.row(0)).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("matches the loop oracle") {
    for (int t = 0; t < 50; ++t) {
      auto m = GcnModel::initialize(5, 7, 6, 100 + static_cast<std::uint64_t>(t));
      m.head_b1.setConstant(0.05);
      m.head_b2.setConstant(-0.1);
      const auto g = random_graph(rng, 5);
      const auto f = forward(m, g);
      const auto ref = reference_logits(m, g);
      for (std::size_t c = 0; c < 6; ++c)
        CHECK(relative_error(f.logits(static_cast<Eigen::Index>(c)), ref[c], 1e-300) < 1e-10);
    }
  }
  SUBCASE("shape mismatch") {
    const auto m = GcnModel::initialize(4, 8, 6, 3);
    CHECK_THROWS_AS(forward(m, graph_of(2, {}, Eigen::MatrixXd::Zero(2, 5))), ContractViolation);
  }
}

TEST_CASE("permutation invariance") {
  Rng rng(31);
  const auto m = GcnModel::initialize(6, 12, 6, 5);
  for (int t = 0; t < 100; ++t) {
    const auto g = random_graph(rng, 6);
    std::vector<std::size_t> perm(g.nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    const auto a = forward(m, g).logits;
    const auto b = forward(m, relabel(g, perm)).logits;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("loss values") {
  auto m = GcnModel::initialize(3, 4, 6, 1);
  m.head_W2.setZero();
  m.head_b2.setZero();
  const std::vector<RequestGraph> gs = {graph_of(2, {{0, 1}, {1, 0}}, Eigen::MatrixXd::Ones(2, 3))};
  const auto p = pointers(gs);
  const std::vector<std::size_t> y = {2};
  CHECK(std::abs(loss_and_grad(m, p, y).loss - std::log(6.0)) < 1e-12);

  m.head_b2(2) = 60.0;
  CHECK(loss_and_grad(m, p, y).loss < 1e-20);

  const std::vector<std::size_t> bad = {6};
  CHECK_THROWS_AS(loss_and_grad(m, p, bad), ContractViolation);
  CHECK_THROWS_AS(loss_and_grad(m, {}, {}), ContractViolation);
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(2024);
  int checked = 0;
  for (int attempt = 0; attempt < 400 && checked < 30; ++attempt) {
    auto m = GcnModel::initialize(4, 5, 6, 1000 + static_cast<std::uint64_t>(attempt));
    for (Eigen::Index i = 0; i < m.head_b1.size(); ++i) m.head_b1(i) = rng.uniform(-0.2, 0.2);
    for (Eigen::Index i = 0; i < m.head_b2.size(); ++i) m.head_b2(i) = rng.uniform(-0.2, 0.2);
    std::vector<RequestGraph> gs;
    for (int k = 0; k < 3; ++k) gs.push_back(random_graph(rng, 4, 4));
    double margin = 1.0;
    for (const auto& g : gs) margin = std::min(margin, relu_margin(m, g));
    if (margin < 1e-3) continue;  // too close to a ReLU kink for differences
    const auto p = pointers(gs);
    const auto y = labels_of(gs);
    const std::vector<double> weights = {0.5, 2.0, 1.0, 3.0, 0.25, 1.5};
    const bool weighted = checked % 2 == 1;
    auto lg = loss_and_grad(m, p, y, weighted ? &weights : nullptr);
    const auto refs = m.param_refs(lg.grad);
    const double err = max_gradient_error(refs, [&] { return loss_and_grad(m, p, y, weighted ? &weights : nullptr).loss; });
    CHECK(err < 1e-4);
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("training") {
  Rng rng(8);
  std::vector<RequestGraph> toy;
  for (int i = 0; i < 20; ++i) {
    auto g = random_graph(rng, 6);
    g.label = kAllClasses[static_cast<std::size_t>(i) % kClassCount];
    toy.push_back(g);
  }
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-2;
  cfg.batch_size = 8;
  cfg.seed = 3;

  SUBCASE("memorises 20 graphs") {
    const auto r = train(GcnModel::initialize(6, 32, 6, 3), toy, cfg);
    const auto pred = predict(r.model, toy);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < toy.size(); ++i) hits += pred.labels[i] == index_of(toy[i].label);
    CHECK(hits == toy.size());
    CHECK(r.loss_curve.size() == 200);
    CHECK(r.train_seconds > 0.0);
  }
  SUBCASE("bit-identical for the same seed") {
    cfg.epochs = 5;
    const auto a = train(GcnModel::initialize(6, 16, 6, 3), toy, cfg);
    const auto b = train(GcnModel::initialize(6, 16, 6, 3), toy, cfg);
    CHECK(a.model == b.model);
    CHECK(a.loss_curve == b.loss_curve);
  }
  SUBCASE("loss falls on a separable toy set") {
    std::vector<RequestGraph> sep;
    for (int i = 0; i < 60; ++i) {
      const bool pos = i % 2 == 0;
      auto g = graph_of(2, {{0, 1}, {1, 0}}, Eigen::MatrixXd::Constant(2, 3, pos ? 1.0 : -1.0));
      g.label = pos ? ClassLabel::http_flood : ClassLabel::normal;
      sep.push_back(g);
    }
    TrainConfig c;
    c.epochs = 10;
    c.batch_size = 16;
    const auto r = train(GcnModel::initialize(3, 16, 6, 7), sep, c);
    for (std::size_t e = 1; e < r.loss_curve.size(); ++e) CHECK(r.loss_curve[e] < r.loss_curve[e - 1]);
  }
  SUBCASE("config errors") {
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(GcnModel::initialize(6, 8, 6, 3), toy, cfg), ConfigError);
    cfg.epochs = 1;
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(train(GcnModel::initialize(6, 8, 6, 3), toy, cfg), ConfigError);
    cfg.learning_rate = 1e-3;
    CHECK_THROWS_AS(train(GcnModel::initialize(6, 8, 6, 3), std::span<const RequestGraph>{}, cfg), ConfigError);
  }
  SUBCASE("non-finite loss aborts") {
    auto m = GcnModel::initialize(6, 8, 6, 3);
    m.head_b2(0) = std::nan("");
    cfg.epochs = 1;
    CHECK_THROWS_AS(train(m, toy, cfg), TrainingError);
  }
}

TEST_CASE("class weights") {
  const std::vector<std::size_t> y = {0, 0, 0, 1};
  const auto w = inverse_class_frequency(y, 6);
  CHECK(w[0] == doctest::Approx(4.0 / (2 * 3)));
  CHECK(w[1] == doctest::Approx(4.0 / (2 * 1)));
  CHECK(w[2] == 0.0);
}

TEST_CASE("predict: argmax ties and latency") {
  Eigen::VectorXd v(6);
  v << 2, 1, 0, 0, 0, 0;
  CHECK(argmax(v) == 0);
  v << 0, 3, 0, 3, 0, 0;
  CHECK(argmax(v) == 1);

  Rng rng(4);
  std::vector<RequestGraph> gs;
  for (int i = 0; i < 1000; ++i) gs.push_back(random_graph(rng, 25));
  const auto m = GcnModel::initialize(25, 32, 6, 7);
  const auto p = predict(m, gs);
  CHECK(p.labels.size() == 1000);
  CHECK(p.logits.rows() == 1000);
  CHECK(p.latency_us_per_graph < 1000.0);
  for (std::size_t i = 0; i < gs.size(); i += 97)
    CHECK((p.logits.row(static_cast<Eigen::Index>(i)).transpose() - forward(m, gs[i]).logits).cwiseAbs().maxCoeff() == 0.0);
  CHECK(predict(m, std::span<const RequestGraph>{}).latency_us_per_graph == 0.0);
}
