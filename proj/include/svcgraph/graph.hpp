// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Request graphs: one per trace. Nodes are the services the trace touched,
// edges the symmetrised service-level call relation, node features a
// per-modality concatenation of log TF-IDF, standardised metrics and/or
// coarse structural descriptors.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "svcgraph/telemetry.hpp"
#include "svcgraph/text_features.hpp"

namespace svcgraph {

enum class Modality : std::uint8_t { trace_only, logs_only, metrics_only, logs_plus_metrics };
inline constexpr std::array<Modality, 4> kAllModalities = {
    Modality::trace_only, Modality::logs_only, Modality::metrics_only, Modality::logs_plus_metrics};
std::string_view to_string(Modality m);
Modality parse_modality(std::string_view name);

inline constexpr std::size_t kTraceFeatureWidth = 10;

struct ModalityConfig {
  Modality mode = Modality::logs_plus_metrics;
  std::size_t log_dim = 16;
  static constexpr std::size_t metric_dim = kMetricChannels;

  std::size_t feature_width() const;
  bool uses_logs() const { return mode == Modality::logs_only || mode == Modality::logs_plus_metrics; }
  bool uses_metrics() const {
    return mode == Modality::metrics_only || mode == Modality::logs_plus_metrics;
  }
};

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

struct GraphSkeleton {
  std::vector<Service> nodes;
  // Directed pairs, closed under reversal, no self loops.
  EdgeList edges;

  std::size_t undirected_edge_count() const { return edges.size() / 2; }
};

struct RequestGraph {
  std::string graph_id;
  std::string run_id;
  std::vector<Service> nodes;
  EdgeList edges;
  Eigen::MatrixXd features;  // |nodes| x d
  ClassLabel label = ClassLabel::normal;
  std::int64_t trace_start_us = 0;
  std::int64_t trace_end_us = 0;

  std::size_t undirected_edge_count() const { return edges.size() / 2; }
};

// Throws StructuralError when a span names a missing parent.
GraphSkeleton trace_to_graph(const TraceRecord& trace);

ClassLabel label_graph(std::int64_t trace_start_us, std::int64_t trace_end_us,
                       std::span<const LabelWindow> windows);

// Per-channel z-score with population statistics. Zero-variance channels keep
// scale 1 so they map to 0.
class MetricScaler {
 public:
  void fit(std::span<const MetricValues> rows);
  bool fitted() const { return fitted_; }
  MetricValues transform(const MetricValues& raw) const;
  const MetricValues& mean() const { return mean_; }
  const MetricValues& scale() const { return scale_; }

  nlohmann::json to_json() const;
  static MetricScaler from_json(const nlohmann::json& j);

 private:
  MetricValues mean_{};
  MetricValues scale_{};
  bool fitted_ = false;
};

// Log and metric lookup structures for one trial.
class TrialTelemetry {
 public:
  static constexpr std::int64_t kLogSlackUs = 500'000;
  static constexpr std::int64_t kMetricLookbackUs = 15'000'000;

  explicit TrialTelemetry(const Trial& trial);

  // Tokens of every log attributed to (trace, service): exact trace_id
  // matches plus untraced logs of that service within the trace interval
  // widened by 500 ms.
  TokenList log_document(const TraceRecord& trace, Service service) const;
  // Latest sample at or before `t_us`, no older than 15 s.
  const MetricValues* metric_at(Service service, std::int64_t t_us) const;

 private:
  struct TimedTokens {
    std::int64_t ts_us;
    TokenList tokens;
  };
  std::unordered_map<std::string, std::vector<std::pair<Service, TokenList>>> by_trace_;
  std::array<std::vector<TimedTokens>, kServiceCount> untraced_;
  std::array<std::vector<std::pair<std::int64_t, MetricValues>>, kServiceCount> metrics_;
};

// Structural trace-only node features: one-hot service, degree, node count,
// undirected edge count, is-root flag.
Eigen::MatrixXd trace_features(const GraphSkeleton& skeleton, Service root_service);

// Builds the full node feature matrix. Throws ContractViolation if the vocab
// or scaler needed by `mode` is unfitted.
RequestGraph attach_features(const GraphSkeleton& skeleton, const TraceRecord& trace,
                             const TrialTelemetry& telemetry, const TfidfVocab& vocab,
                             const MetricScaler& scaler, const ModalityConfig& mode);

// All trials of a run-spec set, read once, with every trace turned into a
// labelled skeleton. Feature attachment is deferred until the split is known.
struct Corpus {
  struct Entry {
    std::size_t trial = 0;
    std::size_t trace = 0;
    std::string graph_id;
    std::string run_id;
    GraphSkeleton skeleton;
    ClassLabel label = ClassLabel::normal;
  };
  std::vector<RunSpec> specs;
  std::vector<Trial> trials;
  std::vector<TrialTelemetry> telemetry;
  std::vector<Entry> entries;

  std::vector<ClassLabel> labels() const;
  std::vector<std::string> run_ids() const;
};

Corpus load_corpus(std::span<const RunSpec> specs);

struct Dataset {
  ModalityConfig modality;
  std::vector<RequestGraph> graphs;
  TfidfVocab vocab;
  MetricScaler scaler;
  bool short_vocabulary = false;
  std::array<std::size_t, kClassCount> class_counts{};
};

// Featurises every corpus entry. Vocab and scaler are fitted only from the
// entries listed in `train_indices`. Throws Error on an empty corpus.
Dataset assemble_dataset(const Corpus& corpus, const ModalityConfig& mode,
                         std::span<const std::size_t> train_indices);

// Dataset JSONL (one RequestGraph per line) and its sidecar.
std::string serialize_graph(const RequestGraph& g);
RequestGraph parse_graph(std::string_view line);
// The sidecar records vocab, scaler, modality, class counts and which graphs
// the transformers were fitted on.
nlohmann::ordered_json dataset_sidecar(const Dataset& d, std::span<const std::size_t> train_indices);
void write_dataset(const std::filesystem::path& dir, const Dataset& d,
                   std::span<const std::size_t> train_indices);

}  // namespace svcgraph
