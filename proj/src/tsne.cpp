// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

#include "svcgraph/errors.hpp"
#include "svcgraph/rng.hpp"

namespace svcgraph {

std::vector<std::size_t> stratified_subsample(std::span<const std::size_t> labels, std::size_t cap,
                                              std::uint64_t seed) {
  std::vector<std::size_t> all(labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  if (labels.size() <= cap) return all;

  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  // Largest-remainder quotas.
  const double scale = static_cast<double>(cap) / static_cast<double>(labels.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::map<std::size_t, std::size_t> quota;
  std::size_t assigned = 0;
  for (const auto& [c, members] : by_class) {
    const double exact = scale * static_cast<double>(members.size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < cap && k < remainders.size(); ++k, ++assigned) ++quota[remainders[k].second];

  Rng rng(derive_seed(seed, "tsne-subsample"));
  std::vector<std::size_t> out;
  for (auto& [c, members] : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& points, double perplexity) {
  const Eigen::Index n = points.rows();
  const Eigen::VectorXd sq = points.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = (-2.0 * points * points.transpose()).colwise() + sq;
  d2.rowwise() += sq.transpose();
  d2 = d2.cwiseMax(0.0);

  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100; ++it) {
      // Shift by the smallest off-diagonal distance for numerical range.
      double dmin = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j)
        if (j != i) dmin = std::min(dmin, d2(i, j));
      double sum = 0.0, weighted = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        row(j) = j == i ? 0.0 : std::exp(-beta * (d2(i, j) - dmin));
        sum += row(j);
        weighted += row(j) * (d2(i, j) - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      const double diff = entropy - target;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    p.row(i) = row.transpose();
  }
  return p;
}

std::vector<TsnePoint> project_logits_2d(const Eigen::MatrixXd& points, std::span<const std::size_t> labels,
                                         const TsneConfig& config) {
  if (static_cast<std::size_t>(points.rows()) != labels.size())
    throw ContractViolation(fmt::format("{} points but {} labels", points.rows(), labels.size()));
  const std::vector<std::size_t> keep = stratified_subsample(labels, config.sample_cap, config.seed);
  const auto n = static_cast<Eigen::Index>(keep.size());
  if (n < 10) throw ContractViolation(fmt::format("t-SNE needs at least 10 samples, got {}", n));
  if (!(config.perplexity > 0.0) || config.perplexity >= static_cast<double>(n) / 3.0)
    throw ConfigError(fmt::format("perplexity {} must be positive and below n/3 = {:.2f}", config.perplexity,
                                  static_cast<double>(n) / 3.0));

  Eigen::MatrixXd x(n, points.cols());
  for (Eigen::Index i = 0; i < n; ++i) x.row(i) = points.row(static_cast<Eigen::Index>(keep[static_cast<std::size_t>(i)]));

  const Eigen::MatrixXd cond = conditional_affinities(x, config.perplexity);
  const Eigen::MatrixXd p = ((cond + cond.transpose()) / (2.0 * static_cast<double>(n))).cwiseMax(1e-12);

  // Identical rows share a starting point; their gradients then stay equal
  // and they end up (near) coincident.
  Rng rng(derive_seed(config.seed, "tsne-init"));
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index j = 0; j < 2; ++j)
    for (Eigen::Index i = 0; i < n; ++i) y(i, j) = rng.normal(0.0, 1e-4);
  for (Eigen::Index i = 1; i < n; ++i)
    for (Eigen::Index k = 0; k < i; ++k)
      if (x.row(i) == x.row(k)) {
        y.row(i) = y.row(k);
        break;
      }
  Eigen::MatrixXd velocity = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n);
  Eigen::MatrixXd grad(n, 2);

  const double lr = config.learning_rate > 0.0
                        ? config.learning_rate
                        : std::max(static_cast<double>(n) / config.exaggeration / 4.0, 50.0);

  for (int it = 0; it < config.iterations; ++it) {
    const double exag = it < config.exaggeration_iters ? config.exaggeration : 1.0;
    const double momentum = it < config.momentum_switch ? 0.5 : 0.8;
    double z = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) {
          num(i, j) = 0.0;
          continue;
        }
        const double dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
        num(i, j) = 1.0 / (1.0 + dx * dx + dy * dy);
        z += num(i, j);
      }
    }
    grad.setZero();
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        if (i == j) continue;
        const double w = (exag * p(i, j) - num(i, j) / z) * num(i, j);
        grad(i, 0) += 4.0 * w * (y(i, 0) - y(j, 0));
        grad(i, 1) += 4.0 * w * (y(i, 1) - y(j, 1));
      }
    }
    for (Eigen::Index k = 0; k < 2; ++k) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const bool same_sign = (grad(i, k) > 0) == (velocity(i, k) > 0);
        gains(i, k) = std::max(0.01, same_sign ? gains(i, k) * 0.8 : gains(i, k) + 0.2);
        velocity(i, k) = momentum * velocity(i, k) - lr * gains(i, k) * grad(i, k);
        y(i, k) += velocity(i, k);
      }
    }
    y.rowwise() -= y.colwise().mean();
  }

  std::vector<TsnePoint> out;
  out.reserve(keep.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t src = keep[static_cast<std::size_t>(i)];
    out.push_back({y(i, 0), y(i, 1), labels[src], src});
  }
  return out;
}

}  // namespace svcgraph
