// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "svcgraph/errors.hpp"
#include "svcgraph/optim.hpp"
#include "svcgraph/rng.hpp"

namespace svcgraph {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t argmax_counts(std::span<const double> counts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[best]) best = i;
  return best;
}

// Every feature replaced by a bin index. Features with at most kMaxBins
// distinct training values get one bin per value; others are cut at sample
// quantiles without splitting runs of equal values. Thresholds fall midway
// between the largest value of one bin and the smallest of the next.
struct BinnedFeatures {
  static constexpr std::size_t kMaxBins = 256;

  std::size_t n = 0;
  std::size_t width = 0;
  std::vector<std::vector<double>> bin_min;  // per feature, ascending
  std::vector<std::vector<double>> bin_max;
  std::vector<std::uint8_t> bin;  // feature-major: bin[f * n + i]

  BinnedFeatures(std::span<const FlatSample> samples, std::size_t w) : n(samples.size()), width(w) {
    bin_min.resize(width);
    bin_max.resize(width);
    bin.resize(width * n);
    std::vector<double> col(n), sorted(n);
    for (std::size_t f = 0; f < width; ++f) {
      for (std::size_t i = 0; i < n; ++i) col[i] = samples[i].features[f];
      // Columns are mostly zero; sort the rest and splice the zeros back in.
      sorted.clear();
      for (const double v : col)
        if (v != 0.0) sorted.push_back(v);
      const std::size_t zeros = n - sorted.size();
      std::sort(sorted.begin(), sorted.end());
      sorted.insert(std::lower_bound(sorted.begin(), sorted.end(), 0.0), zeros, 0.0);
      std::size_t distinct = 0;
      for (std::size_t k = 0; k < n; ++k) distinct += k == 0 || sorted[k] != sorted[k - 1];
      const std::size_t target = distinct <= kMaxBins ? 1 : (n + kMaxBins - 2) / (kMaxBins - 1);
      auto& lo = bin_min[f];
      auto& hi = bin_max[f];
      std::size_t in_bin = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double v = sorted[k];
        const bool new_value = k == 0 || v != sorted[k - 1];
        if (lo.empty() || (new_value && in_bin >= target)) {
          lo.push_back(v);
          hi.push_back(v);
          in_bin = 0;
        }
        hi.back() = v;
        ++in_bin;
      }
      // Bin of a value: last bin whose minimum is <= the value.
      for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::upper_bound(lo.begin(), lo.end(), col[i]);
        bin[f * n + i] = static_cast<std::uint8_t>(it - lo.begin() - 1);
      }
    }
  }
};

struct SplitCandidate {
  bool valid = false;
  double impurity = 0.0;
  std::size_t feature = 0;
  std::uint32_t left_max_bin = 0;  // samples with bin <= this go left
  double threshold = 0.0;
};

class TreeBuilder {
 public:
  static constexpr std::size_t kClassShift = 3;  // histogram row stride of 8 classes

  TreeBuilder(const BinnedFeatures& data, std::span<const std::uint32_t> labels, std::size_t classes,
              const ForestConfig& config, std::size_t mtry)
      : data_(data), labels_(labels), classes_(classes), config_(config), mtry_(mtry) {
    if (classes > (std::size_t{1} << kClassShift)) throw ContractViolation("too many classes for the forest");
    hist_.assign(BinnedFeatures::kMaxBins << kClassShift, 0);
    hist_w_.assign(BinnedFeatures::kMaxBins, 0);
    left_.assign(classes, 0.0);
    features_.resize(data.width);
    std::iota(features_.begin(), features_.end(), 0);
  }

  static std::uint64_t pack(std::uint32_t index, std::uint32_t label, std::uint32_t weight) {
    return static_cast<std::uint64_t>(index) << 32 | static_cast<std::uint64_t>(weight) << 8 | label;
  }
  static std::uint32_t index_of_entry(std::uint64_t e) { return static_cast<std::uint32_t>(e >> 32); }
  static std::uint32_t weight_of(std::uint64_t e) { return static_cast<std::uint32_t>(e >> 8) & 0xFFFFFFu; }
  static std::uint32_t label_of(std::uint64_t e) { return static_cast<std::uint32_t>(e & 0xFFu); }

  DecisionTree build(Rng& rng) {
    weight_.assign(data_.n, 0);
    if (config_.bootstrap) {
      for (std::size_t k = 0; k < data_.n; ++k) weight_[rng.index(data_.n)] += 1;
    } else {
      std::fill(weight_.begin(), weight_.end(), 1u);
    }
    node_.clear();
    for (std::size_t i = 0; i < data_.n; ++i) {
      if (weight_[i] == 0) continue;
      node_.push_back(pack(static_cast<std::uint32_t>(i), labels_[i], weight_[i]));
    }

    DecisionTree tree;
    // A feature constant at a node stays constant in its subtree.
    struct Task {
      std::int32_t node;
      std::size_t begin, end, depth;
      std::vector<std::uint8_t> constant;
    };
    std::vector<Task> stack;
    tree.nodes.emplace_back();
    stack.push_back({0, 0, node_.size(), 0, std::vector<std::uint8_t>(data_.width, 0)});
    std::vector<double> counts(classes_);
    while (!stack.empty()) {
      Task t = std::move(stack.back());
      stack.pop_back();
      std::fill(counts.begin(), counts.end(), 0.0);
      double total = 0.0;
      for (std::size_t k = t.begin; k < t.end; ++k) {
        counts[label_of(node_[k])] += weight_of(node_[k]);
        total += weight_of(node_[k]);
      }
      tree.nodes[t.node].label = static_cast<std::uint32_t>(argmax_counts(counts));
      const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
      const bool depth_capped = config_.max_depth > 0 && t.depth >= config_.max_depth;
      if (pure || depth_capped || total < 2.0 * static_cast<double>(config_.min_leaf) || t.end - t.begin < 2)
        continue;

      const SplitCandidate best = find_split(rng, t.begin, t.end, counts, total, t.constant);
      if (!best.valid) continue;

      const std::size_t f = best.feature;
      // Stable partition through a scratch buffer.
      const std::uint8_t* fr = data_.bin.data() + f * data_.n;
      scratch_.clear();
      std::size_t mid = t.begin;
      for (std::size_t k = t.begin; k < t.end; ++k) {
        const std::uint64_t e = node_[k];
        if (fr[index_of_entry(e)] <= best.left_max_bin)
          node_[mid++] = e;
        else
          scratch_.push_back(e);
      }
      std::copy(scratch_.begin(), scratch_.end(), node_.begin() + static_cast<std::ptrdiff_t>(mid));
      const auto left = static_cast<std::int32_t>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      auto& node = tree.nodes[t.node];
      node.feature = static_cast<std::int32_t>(f);
      node.threshold = best.threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({left + 1, mid, t.end, t.depth + 1, t.constant});
      stack.push_back({left, t.begin, mid, t.depth + 1, std::move(t.constant)});
    }
    return tree;
  }

 private:
  SplitCandidate find_split(Rng& rng, std::size_t begin, std::size_t end, std::span<const double> parent_counts,
                            double total, std::vector<std::uint8_t>& constant) {
    SplitCandidate best;
    std::size_t visited = 0;
    // Lazy Fisher-Yates over the feature list; constant features do not
    // count towards mtry, matching the usual CART random-subspace rule.
    for (std::size_t k = 0; k < features_.size() && visited < mtry_; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.index(features_.size() - k));
      std::swap(features_[k], features_[j]);
      const std::size_t f = features_[k];
      if (constant[f]) continue;
      if (evaluate_feature(f, begin, end, parent_counts, total, best))
        ++visited;
      else
        constant[f] = 1;
    }
    return best;
  }

  // Returns false when the feature is constant within the node.
  bool evaluate_feature(std::size_t f, std::size_t begin, std::size_t end, std::span<const double> parent_counts,
                        double total, SplitCandidate& best) {
    const std::uint8_t* r = data_.bin.data() + f * data_.n;
    const std::size_t count = end - begin;
    const std::uint64_t* e = node_.data() + begin;
    // Cheap scan that stops at the first differing bin.
    const std::uint8_t first = r[index_of_entry(e[0])];
    std::size_t k0 = 1;
    while (k0 < count && r[index_of_entry(e[k0])] == first) ++k0;
    if (k0 == count) return false;

    // Large nodes fill every bin anyway, so scan them all and skip the
    // per-sample range and weight bookkeeping.
    const std::size_t nbins = data_.bin_min[f].size();
    std::size_t lo = 0, hi = nbins - 1;
    const bool dense = count >= 2 * nbins;
    if (dense) {
      for (std::size_t k = 0; k < count; ++k) {
        const std::uint64_t x = e[k];
        hist_[(static_cast<std::size_t>(r[index_of_entry(x)]) << kClassShift) + label_of(x)] += weight_of(x);
      }
      for (std::size_t b = 0; b < nbins; ++b) {
        const std::uint32_t* h = hist_.data() + (b << kClassShift);
        std::uint32_t sum = 0;
        for (std::size_t c = 0; c < (std::size_t{1} << kClassShift); ++c) sum += h[c];
        hist_w_[b] = sum;
      }
    } else {
      lo = first;
      hi = first;
      for (std::size_t k = 0; k < count; ++k) {
        const std::uint64_t x = e[k];
        const std::uint8_t v = r[index_of_entry(x)];
        lo = std::min<std::size_t>(lo, v);
        hi = std::max<std::size_t>(hi, v);
        hist_[(static_cast<std::size_t>(v) << kClassShift) + label_of(x)] += weight_of(x);
        hist_w_[v] += weight_of(x);
      }
    }
    double* left = left_.data();
    std::fill(left_.begin(), left_.end(), 0.0);
    double left_w = 0.0;
    // Weighted Gini of the split, (w - sum l^2 / w_l - sum r^2 / w_r) / w.
    auto consider = [&](std::uint32_t left_bin, std::uint32_t right_bin) {
      const double right_w = total - left_w;
      const double min_leaf = static_cast<double>(config_.min_leaf);
      if (left_w < min_leaf || right_w < min_leaf) return;
      double sl = 0.0, sr = 0.0;
      for (std::size_t c = 0; c < classes_; ++c) {
        const double r = parent_counts[c] - left[c];
        sl += left[c] * left[c];
        sr += r * r;
      }
      const double imp = (total - sl / left_w - sr / right_w) / total;
      if (!best.valid || imp < best.impurity) {
        const double a = data_.bin_max[f][left_bin], b = data_.bin_min[f][right_bin];
        double thr = 0.5 * (a + b);
        if (!(thr < b)) thr = a;
        best = {true, imp, f, left_bin, thr};
      }
    };

    std::int64_t prev = -1;
    for (std::size_t b = lo; b <= hi; ++b) {
      const std::uint32_t bw = hist_w_[b];
      if (bw == 0) continue;
      hist_w_[b] = 0;
      std::uint32_t* h = hist_.data() + (b << kClassShift);
      if (prev >= 0) consider(static_cast<std::uint32_t>(prev), static_cast<std::uint32_t>(b));
      for (std::size_t c = 0; c < classes_; ++c) {
        left[c] += h[c];
        h[c] = 0;
      }
      left_w += bw;
      prev = static_cast<std::int64_t>(b);
    }
    return true;
  }

  const BinnedFeatures& data_;
  std::span<const std::uint32_t> labels_;
  std::size_t classes_;
  const ForestConfig& config_;
  std::size_t mtry_;
  std::vector<std::uint32_t> weight_;
  std::vector<std::uint32_t> hist_;
  std::vector<std::uint32_t> hist_w_;
  std::vector<double> left_;
  // Samples of the tree, grouped by node: index << 32 | weight << 8 | label.
  std::vector<std::uint64_t> node_;
  std::vector<std::uint64_t> scratch_;
  std::vector<std::size_t> features_;
};

void check_width(std::size_t expected, const FlatSample& s) {
  if (s.features.size() != expected)
    throw ContractViolation(
        fmt::format("flat sample has width {}, model expects {}", s.features.size(), expected));
}

Eigen::MatrixXd glorot(Rng& rng, Eigen::Index fan_in, Eigen::Index fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Eigen::MatrixXd m(fan_in, fan_out);
  for (Eigen::Index j = 0; j < fan_out; ++j)
    for (Eigen::Index i = 0; i < fan_in; ++i) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

template <typename M>
nlohmann::ordered_json dense_json(const M& m) {
  auto rows = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd dense_from_json(const nlohmann::json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = j[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
  return m;
}

Eigen::VectorXd vec_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

FlatSample flatten(const RequestGraph& graph) {
  const auto d = static_cast<std::size_t>(graph.features.cols());
  FlatSample s;
  s.label = graph.label;
  s.run_id = graph.run_id;
  s.features.assign(flat_width(d), 0.0);
  std::array<bool, kServiceCount> used{};
  for (std::size_t i = 0; i < graph.nodes.size(); ++i) {
    const std::size_t slot = index_of(graph.nodes[i]);
    if (used[slot])
      throw ContractViolation(fmt::format("graph {} lists service {} twice", graph.graph_id,
                                          to_string(graph.nodes[i])));
    used[slot] = true;
    for (std::size_t k = 0; k < d; ++k)
      s.features[slot * d + k] = graph.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  }
  s.features[kServiceCount * d] = static_cast<double>(graph.nodes.size());
  s.features[kServiceCount * d + 1] = static_cast<double>(graph.undirected_edge_count());
  return s;
}

std::vector<FlatSample> flatten_all(std::span<const RequestGraph> graphs) {
  std::vector<FlatSample> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(flatten(g));
  return out;
}

std::vector<double> slot_features(const FlatSample& sample, Service service, std::size_t node_dim) {
  const auto begin = sample.features.begin() + static_cast<std::ptrdiff_t>(index_of(service) * node_dim);
  return {begin, begin + static_cast<std::ptrdiff_t>(node_dim)};
}

double gini(std::span<const double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (total <= 0.0) return 0.0;
  double sum_sq = 0.0;
  for (double c : counts) sum_sq += (c / total) * (c / total);
  return 1.0 - sum_sq;
}

double split_impurity(std::span<const double> left, std::span<const double> right) {
  const double wl = std::accumulate(left.begin(), left.end(), 0.0);
  const double wr = std::accumulate(right.begin(), right.end(), 0.0);
  const double w = wl + wr;
  if (w <= 0.0) return 0.0;
  return (wl * gini(left) + wr * gini(right)) / w;
}

std::size_t DecisionTree::predict(std::span<const double> x) const {
  std::size_t k = 0;
  while (nodes[k].feature >= 0) {
    const auto& n = nodes[k];
    k = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[k].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [k, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[k].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[k].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[k].right), d + 1);
    }
  }
  return best;
}

std::size_t RandomForest::predict(std::span<const double> x) const {
  std::vector<double> votes(classes_, 0.0);
  for (const auto& t : trees_) votes[t.predict(x)] += 1.0;
  return argmax_counts(votes);
}

std::size_t RandomForest::predict_with_order(std::span<const double> x, std::span<const std::size_t> order) const {
  std::vector<double> votes(classes_, 0.0);
  for (std::size_t k : order) votes[trees_.at(k).predict(x)] += 1.0;
  return argmax_counts(votes);
}

nlohmann::ordered_json RandomForest::to_json() const {
  nlohmann::ordered_json j;
  j["width"] = width_;
  j["classes"] = classes_;
  auto trees = nlohmann::ordered_json::array();
  for (const auto& t : trees_) {
    auto nodes = nlohmann::ordered_json::array();
    for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.label});
    trees.push_back(std::move(nodes));
  }
  j["trees"] = std::move(trees);
  return j;
}

RandomForest RandomForest::from_json(const nlohmann::json& j) {
  try {
    std::vector<DecisionTree> trees;
    for (const auto& t : j.at("trees")) {
      DecisionTree tree;
      for (const auto& n : t)
        tree.nodes.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<double>(), n.at(2).get<std::int32_t>(),
                              n.at(3).get<std::int32_t>(), n.at(4).get<std::uint32_t>()});
      trees.push_back(std::move(tree));
    }
    return RandomForest(std::move(trees), j.at("width").get<std::size_t>(), j.at("classes").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed forest checkpoint: {}", e.what()));
  }
}

ForestTrainResult train_random_forest(std::span<const FlatSample> samples, const ForestConfig& config) {
  if (config.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  if (config.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (samples.empty()) throw ConfigError("training set is empty");
  const auto t0 = Clock::now();
  const std::size_t width = samples.front().features.size();
  for (const auto& s : samples) check_width(width, s);

  std::vector<std::uint32_t> labels;
  labels.reserve(samples.size());
  std::array<std::size_t, kClassCount> present{};
  for (const auto& s : samples) {
    labels.push_back(static_cast<std::uint32_t>(index_of(s.label)));
    ++present[index_of(s.label)];
  }
  ForestTrainResult result;
  result.single_class = std::count_if(present.begin(), present.end(), [](std::size_t c) { return c > 0; }) < 2;

  const std::size_t mtry = std::clamp<std::size_t>(
      config.features_per_split.value_or(static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(width))))),
      1, width);
  const BinnedFeatures ranked(samples, width);
  TreeBuilder builder(ranked, labels, kClassCount, config, mtry);
  std::vector<DecisionTree> trees;
  trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    Rng rng(derive_seed(derive_seed(config.seed, "forest"), static_cast<std::uint64_t>(t)));
    trees.push_back(builder.build(rng));
  }
  result.model = RandomForest(std::move(trees), width, kClassCount);
  result.train_seconds = seconds_since(t0);
  return result;
}

MlpModel MlpModel::initialize(std::size_t width, std::size_t hidden, std::size_t classes, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "mlp-init"));
  MlpModel m;
  m.input_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
  m.input_scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(width));
  m.W1 = glorot(rng, static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(hidden));
  m.b1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(hidden));
  m.W2 = glorot(rng, static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(classes));
  m.b2 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
  return m;
}

Eigen::VectorXd MlpModel::standardize(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> raw(x.data(), static_cast<Eigen::Index>(x.size()));
  return ((raw - input_mean).array() / input_scale.array()).matrix();
}

Eigen::VectorXd MlpModel::logits(std::span<const double> x) const {
  const Eigen::VectorXd z = standardize(x);
  const Eigen::VectorXd h = (W1.transpose() * z + b1).cwiseMax(0.0);
  return W2.transpose() * h + b2;
}

nlohmann::ordered_json MlpModel::to_json() const {
  nlohmann::ordered_json j;
  j["input_mean"] = std::vector<double>(input_mean.data(), input_mean.data() + input_mean.size());
  j["input_scale"] = std::vector<double>(input_scale.data(), input_scale.data() + input_scale.size());
  j["W1"] = dense_json(W1);
  j["b1"] = std::vector<double>(b1.data(), b1.data() + b1.size());
  j["W2"] = dense_json(W2);
  j["b2"] = std::vector<double>(b2.data(), b2.data() + b2.size());
  return j;
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  try {
    MlpModel m;
    m.input_mean = vec_from_json(j.at("input_mean"));
    m.input_scale = vec_from_json(j.at("input_scale"));
    m.W1 = dense_from_json(j.at("W1"));
    m.b1 = vec_from_json(j.at("b1"));
    m.W2 = dense_from_json(j.at("W2"));
    m.b2 = vec_from_json(j.at("b2"));
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed MLP checkpoint: {}", e.what()));
  }
}

MlpGrad mlp_loss_and_grad(const MlpModel& model, std::span<const FlatSample* const> batch) {
  if (batch.empty()) throw ContractViolation("mlp_loss_and_grad needs a nonempty batch");
  MlpGrad g;
  g.W1 = Eigen::MatrixXd::Zero(model.W1.rows(), model.W1.cols());
  g.b1 = Eigen::VectorXd::Zero(model.b1.size());
  g.W2 = Eigen::MatrixXd::Zero(model.W2.rows(), model.W2.cols());
  g.b2 = Eigen::VectorXd::Zero(model.b2.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (const FlatSample* s : batch) {
    check_width(model.width(), *s);
    const auto y = static_cast<Eigen::Index>(index_of(s->label));
    const Eigen::VectorXd z = model.standardize(s->features);
    const Eigen::VectorXd pre = model.W1.transpose() * z + model.b1;
    const Eigen::VectorXd h = pre.cwiseMax(0.0);
    const Eigen::VectorXd logits = model.W2.transpose() * h + model.b2;
    const double mx = logits.maxCoeff();
    const Eigen::VectorXd e = (logits.array() - mx).exp().matrix();
    const double sum = e.sum();
    g.loss += inv_b * (mx + std::log(sum) - logits(y));
    Eigen::VectorXd d_logits = e / sum;
    d_logits(y) -= 1.0;
    d_logits *= inv_b;
    g.W2.noalias() += h * d_logits.transpose();
    g.b2 += d_logits;
    const Eigen::VectorXd d_pre = ((model.W2 * d_logits).array() * (pre.array() > 0.0).cast<double>()).matrix();
    g.W1.noalias() += z * d_pre.transpose();
    g.b1 += d_pre;
  }
  return g;
}

MlpTrainResult train_mlp(std::span<const FlatSample> samples, const MlpConfig& config) {
  if (config.epochs < 1) throw ConfigError(fmt::format("epochs must be >= 1, got {}", config.epochs));
  if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (config.hidden == 0 || config.batch_size == 0) throw ConfigError("hidden and batch_size must be positive");
  if (samples.empty()) throw ConfigError("training set is empty");
  const auto t0 = Clock::now();
  const std::size_t width = samples.front().features.size();
  for (const auto& s : samples) check_width(width, s);

  MlpModel model = MlpModel::initialize(width, config.hidden, kClassCount, config.seed);
  const auto n = static_cast<double>(samples.size());
  for (const auto& s : samples)
    model.input_mean += Eigen::Map<const Eigen::VectorXd>(s.features.data(), static_cast<Eigen::Index>(width));
  model.input_mean /= n;
  Eigen::VectorXd var = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
  for (const auto& s : samples) {
    const Eigen::Map<const Eigen::VectorXd> x(s.features.data(), static_cast<Eigen::Index>(width));
    var += (x - model.input_mean).cwiseAbs2();
  }
  for (Eigen::Index k = 0; k < var.size(); ++k) {
    const double sd = std::sqrt(var(k) / n);
    model.input_scale(k) = sd > 1e-12 ? sd : 1.0;
  }

  Rng rng(derive_seed(config.seed, "mlp-shuffle"));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Adam adam(config.learning_rate);
  MlpTrainResult result;
  std::vector<const FlatSample*> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(&samples[order[k]]);
      MlpGrad g = mlp_loss_and_grad(model, batch);
      if (!std::isfinite(g.loss))
        throw TrainingError(fmt::format("non-finite MLP loss at epoch {} batch {}; |W1|={} |W2|={}", epoch + 1,
                                        start / config.batch_size, model.W1.norm(), model.W2.norm()));
      const std::array<ParamRef, 4> refs = {param_ref(model.W1, g.W1), param_ref(model.b1, g.b1),
                                            param_ref(model.W2, g.W2), param_ref(model.b2, g.b2)};
      adam.step(refs);
      epoch_loss += g.loss * static_cast<double>(end - start);
    }
    result.loss_curve.push_back(epoch_loss / n);
  }
  result.model = std::move(model);
  result.train_seconds = seconds_since(t0);
  return result;
}

BaselinePrediction predict_baseline(const RandomForest& model, std::span<const FlatSample> samples) {
  BaselinePrediction p;
  for (const auto& s : samples) check_width(model.width(), s);
  p.labels.reserve(samples.size());
  const auto t0 = Clock::now();
  for (const auto& s : samples) p.labels.push_back(model.predict(s.features));
  if (!samples.empty())
    p.latency_us_per_sample = seconds_since(t0) * 1e6 / static_cast<double>(samples.size());
  return p;
}

BaselinePrediction predict_baseline(const MlpModel& model, std::span<const FlatSample> samples) {
  BaselinePrediction p;
  for (const auto& s : samples) check_width(model.width(), s);
  p.labels.reserve(samples.size());
  const auto t0 = Clock::now();
  for (const auto& s : samples) {
    const Eigen::VectorXd l = model.logits(s.features);
    std::size_t best = 0;
    for (Eigen::Index k = 1; k < l.size(); ++k)
      if (l(k) > l(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(k);
    p.labels.push_back(best);
  }
  if (!samples.empty())
    p.latency_us_per_sample = seconds_since(t0) * 1e6 / static_cast<double>(samples.size());
  return p;
}

}  // namespace svcgraph
