// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Random small graphs, node relabelling and a central finite-difference
// checker, shared by unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "svcgraph/baselines.hpp"
#include "svcgraph/gcn.hpp"
#include "svcgraph/graph.hpp"
#include "svcgraph/optim.hpp"
#include "svcgraph/rng.hpp"

namespace svcgraph::testing {

inline RequestGraph random_graph(Rng& rng, std::size_t width, std::size_t max_nodes = kServiceCount) {
  RequestGraph g;
  const std::size_t n = 1 + static_cast<std::size_t>(rng.index(max_nodes));
  std::vector<Service> pool(kAllServices.begin(), kAllServices.end());
  rng.shuffle(std::span<Service>(pool));
  g.nodes.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.bernoulli(0.5)) {
        g.edges.emplace_back(i, j);
        g.edges.emplace_back(j, i);
      }
  g.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(width));
  for (Eigen::Index i = 0; i < g.features.size(); ++i) g.features.data()[i] = rng.uniform(-1.0, 1.0);
  g.label = kAllClasses[rng.index(kClassCount)];
  g.graph_id = "g";
  return g;
}

// Node k of the result is node perm[k] of the input.
inline RequestGraph relabel(const RequestGraph& g, const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> where(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) where[perm[k]] = k;
  RequestGraph out = g;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    out.nodes[k] = g.nodes[perm[k]];
    out.features.row(static_cast<Eigen::Index>(k)) = g.features.row(static_cast<Eigen::Index>(perm[k]));
  }
  for (auto& [a, b] : out.edges) {
    a = where[a];
    b = where[b];
  }
  return out;
}

// Straight-line forward pass with explicit loops.
inline std::vector<double> reference_logits(const GcnModel& m, const RequestGraph& g) {
  const std::size_t n = g.nodes.size();
  const auto a = oracle::normalized_adjacency(n, {g.edges.begin(), g.edges.end()});
  auto layer = [&](const std::vector<std::vector<double>>& x, const Eigen::MatrixXd& w) {
    const std::size_t in = static_cast<std::size_t>(w.rows()), out = static_cast<std::size_t>(w.cols());
    std::vector<std::vector<double>> ax(n, std::vector<double>(in, 0.0)), h(n, std::vector<double>(out, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < in; ++k) ax[i][k] += a[i][j] * x[j][k];
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t o = 0; o < out; ++o) {
        double s = 0;
        for (std::size_t k = 0; k < in; ++k) s += ax[i][k] * w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(o));
        h[i][o] = std::max(0.0, s);
      }
    return h;
  };
  std::vector<std::vector<double>> x(n, std::vector<double>(static_cast<std::size_t>(g.features.cols())));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < x[i].size(); ++k) x[i][k] = g.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  const auto h2 = layer(layer(x, m.W1), m.W2);
  const std::size_t h = static_cast<std::size_t>(m.W2.cols());
  std::vector<double> pooled(h, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < h; ++k) pooled[k] += h2[i][k] / static_cast<double>(n);
  std::vector<double> hidden(static_cast<std::size_t>(m.head_W1.cols()));
  for (std::size_t o = 0; o < hidden.size(); ++o) {
    double s = m.head_b1(static_cast<Eigen::Index>(o));
    for (std::size_t k = 0; k < h; ++k) s += pooled[k] * m.head_W1(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(o));
    hidden[o] = std::max(0.0, s);
  }
  std::vector<double> logits(static_cast<std::size_t>(m.head_W2.cols()));
  for (std::size_t c = 0; c < logits.size(); ++c) {
    double s = m.head_b2(static_cast<Eigen::Index>(c));
    for (std::size_t k = 0; k < hidden.size(); ++k)
      s += hidden[k] * m.head_W2(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
    logits[c] = s;
  }
  return logits;
}

// |a - b| / max(|a|, |b|, floor). The floor keeps entries whose true
// gradient is ~0 from dividing by nothing.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Central differences of `loss` against the analytic gradients in `params`.
// Returns the largest relative error over every parameter entry.
template <typename LossFn>
double max_gradient_error(std::span<const ParamRef> params, LossFn&& loss, double eps = 1e-5) {
  double worst = 0.0;
  for (const auto& p : params)
    for (std::size_t i = 0; i < p.size; ++i) {
      const double keep = p.value[i];
      p.value[i] = keep + eps;
      const double up = loss();
      p.value[i] = keep - eps;
      const double down = loss();
      p.value[i] = keep;
      worst = std::max(worst, relative_error((up - down) / (2.0 * eps), p.grad[i]));
    }
  return worst;
}

// Smallest |pre-activation| across every ReLU of the forward pass; instances
// too close to a kink are resampled by the callers.
inline double relu_margin(const GcnModel& m, const RequestGraph& g) {
  const auto f = forward(m, g);
  return std::min({f.cache.z1.cwiseAbs().minCoeff(), f.cache.z2.cwiseAbs().minCoeff(),
                   f.cache.head_pre.cwiseAbs().minCoeff()});
}

inline double relu_margin(const MlpModel& m, const FlatSample& s) {
  return (m.W1.transpose() * m.standardize(s.features) + m.b1).cwiseAbs().minCoeff();
}

inline FlatSample random_sample(Rng& rng, std::size_t width) {
  FlatSample s;
  s.features.resize(width);
  for (auto& v : s.features) v = rng.uniform(-2.0, 2.0);
  s.label = kAllClasses[rng.index(kClassCount)];
  return s;
}

}  // namespace svcgraph::testing
