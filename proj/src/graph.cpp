// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "svcgraph/errors.hpp"

namespace svcgraph {

namespace fs = std::filesystem;

std::string_view to_string(Modality m) {
  switch (m) {
    case Modality::trace_only: return "trace_only";
    case Modality::logs_only: return "logs_only";
    case Modality::metrics_only: return "metrics_only";
    case Modality::logs_plus_metrics: return "logs_plus_metrics";
  }
  return "logs_plus_metrics";
}

Modality parse_modality(std::string_view name) {
  for (Modality m : kAllModalities)
    if (to_string(m) == name) return m;
  throw ParseError(fmt::format("unknown modality '{}'", name));
}

std::size_t ModalityConfig::feature_width() const {
  switch (mode) {
    case Modality::trace_only: return kTraceFeatureWidth;
    case Modality::logs_only: return log_dim;
    case Modality::metrics_only: return metric_dim;
    case Modality::logs_plus_metrics: return log_dim + metric_dim;
  }
  return 0;
}

GraphSkeleton trace_to_graph(const TraceRecord& trace) {
  GraphSkeleton g;
  std::unordered_map<std::string, Service> span_service;
  for (const auto& s : trace.spans) span_service.emplace(s.span_id, s.service);

  std::array<std::size_t, kServiceCount> slot;
  slot.fill(kServiceCount);
  auto node_of = [&](Service s) {
    std::size_t& i = slot[index_of(s)];
    if (i == kServiceCount) {
      i = g.nodes.size();
      g.nodes.push_back(s);
    }
    return i;
  };
  for (const auto& s : trace.spans) node_of(s.service);

  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& s : trace.spans) {
    if (!s.parent_span_id) continue;
    auto it = span_service.find(*s.parent_span_id);
    if (it == span_service.end())
      throw StructuralError(fmt::format("trace {}: span {} references missing parent {}",
                                        trace.trace_id, s.span_id, *s.parent_span_id));
    if (it->second == s.service) continue;
    const std::size_t a = node_of(it->second);
    const std::size_t b = node_of(s.service);
    if (!seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
    g.edges.emplace_back(a, b);
    g.edges.emplace_back(b, a);
  }
  return g;
}

ClassLabel label_graph(std::int64_t trace_start_us, std::int64_t trace_end_us,
                       std::span<const LabelWindow> windows) {
  for (const auto& w : windows) {
    if (w.class_label == ClassLabel::normal) continue;
    if (windows_overlap(trace_start_us, trace_end_us, w.start_us, w.end_us)) return w.class_label;
  }
  return ClassLabel::normal;
}

void MetricScaler::fit(std::span<const MetricValues> rows) {
  if (rows.empty()) throw ContractViolation("MetricScaler::fit needs at least one row");
  const double n = static_cast<double>(rows.size());
  mean_.fill(0.0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < kMetricChannels; ++c) mean_[c] += r[c];
  for (auto& m : mean_) m /= n;
  MetricValues var{};
  for (const auto& r : rows)
    for (std::size_t c = 0; c < kMetricChannels; ++c) var[c] += (r[c] - mean_[c]) * (r[c] - mean_[c]);
  for (std::size_t c = 0; c < kMetricChannels; ++c) {
    const double sd = std::sqrt(var[c] / n);
    scale_[c] = sd > 1e-12 ? sd : 1.0;
  }
  fitted_ = true;
}

MetricValues MetricScaler::transform(const MetricValues& raw) const {
  if (!fitted_) throw ContractViolation("MetricScaler used before fit");
  MetricValues out;
  for (std::size_t c = 0; c < kMetricChannels; ++c) out[c] = (raw[c] - mean_[c]) / scale_[c];
  return out;
}

nlohmann::json MetricScaler::to_json() const { return {{"mean", mean_}, {"scale", scale_}}; }

MetricScaler MetricScaler::from_json(const nlohmann::json& j) {
  MetricScaler s;
  s.mean_ = j.at("mean").get<MetricValues>();
  s.scale_ = j.at("scale").get<MetricValues>();
  s.fitted_ = true;
  return s;
}

TrialTelemetry::TrialTelemetry(const Trial& trial) {
  for (const auto& l : trial.logs) {
    if (l.trace_id) {
      by_trace_[*l.trace_id].emplace_back(l.service, tokenize(l.message));
    } else {
      untraced_[index_of(l.service)].push_back({l.ts_us, tokenize(l.message)});
    }
  }
  for (auto& v : untraced_)
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });
  for (const auto& m : trial.metrics) metrics_[index_of(m.service)].emplace_back(m.ts_us, m.values);
  for (auto& v : metrics_)
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

TokenList TrialTelemetry::log_document(const TraceRecord& trace, Service service) const {
  TokenList doc;
  if (auto it = by_trace_.find(trace.trace_id); it != by_trace_.end()) {
    for (const auto& [svc, toks] : it->second)
      if (svc == service) doc.insert(doc.end(), toks.begin(), toks.end());
  }
  const auto& pool = untraced_[index_of(service)];
  const std::int64_t lo = trace.start_us() - kLogSlackUs;
  const std::int64_t hi = trace.end_us() + kLogSlackUs;
  auto it = std::lower_bound(pool.begin(), pool.end(), lo,
                             [](const TimedTokens& t, std::int64_t v) { return t.ts_us < v; });
  for (; it != pool.end() && it->ts_us <= hi; ++it) doc.insert(doc.end(), it->tokens.begin(), it->tokens.end());
  return doc;
}

const MetricValues* TrialTelemetry::metric_at(Service service, std::int64_t t_us) const {
  const auto& v = metrics_[index_of(service)];
  auto it = std::upper_bound(v.begin(), v.end(), t_us,
                             [](std::int64_t t, const auto& row) { return t < row.first; });
  if (it == v.begin()) return nullptr;
  --it;
  if (t_us - it->first > kMetricLookbackUs) return nullptr;
  return &it->second;
}

Eigen::MatrixXd trace_features(const GraphSkeleton& skeleton, Service root_service) {
  const auto n = static_cast<Eigen::Index>(skeleton.nodes.size());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, kTraceFeatureWidth);
  std::vector<double> degree(skeleton.nodes.size(), 0.0);
  for (const auto& [a, b] : skeleton.edges) {
    (void)b;
    degree[a] += 1.0;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const Service s = skeleton.nodes[static_cast<std::size_t>(i)];
    x(i, static_cast<Eigen::Index>(index_of(s))) = 1.0;
    x(i, 6) = degree[static_cast<std::size_t>(i)];
    x(i, 7) = static_cast<double>(n);
    x(i, 8) = static_cast<double>(skeleton.undirected_edge_count());
    x(i, 9) = s == root_service ? 1.0 : 0.0;
  }
  return x;
}

namespace {

Service root_service_of(const TraceRecord& trace) {
  for (const auto& s : trace.spans)
    if (!s.parent_span_id) return s.service;
  return trace.spans.front().service;
}

// Shared by attach_features and assemble_dataset; the latter passes
// precomputed log documents.
RequestGraph featurise(const GraphSkeleton& skeleton, const TraceRecord& trace,
                       const TrialTelemetry& telemetry, std::span<const TokenList> docs,
                       const TfidfVocab& vocab, const MetricScaler& scaler,
                       const ModalityConfig& mode) {
  if (mode.uses_logs() && !vocab.fitted())
    throw ContractViolation("log features requested with an unfitted vocabulary");
  if (mode.uses_metrics() && !scaler.fitted())
    throw ContractViolation("metric features requested with an unfitted scaler");

  RequestGraph g;
  g.run_id = trace.run_id;
  g.graph_id = trace.run_id + "/" + trace.trace_id;
  g.nodes = skeleton.nodes;
  g.edges = skeleton.edges;
  g.trace_start_us = trace.start_us();
  g.trace_end_us = trace.end_us();

  const auto n = static_cast<Eigen::Index>(skeleton.nodes.size());
  if (mode.mode == Modality::trace_only) {
    g.features = trace_features(skeleton, root_service_of(trace));
    return g;
  }
  g.features = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(mode.feature_width()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto node = static_cast<std::size_t>(i);
    Eigen::Index col = 0;
    if (mode.uses_logs()) {
      // Short vocabularies leave the trailing log columns at zero.
      const auto v = transform(docs[node], vocab);
      for (std::size_t k = 0; k < v.size() && k < mode.log_dim; ++k)
        g.features(i, static_cast<Eigen::Index>(k)) = v[k];
      col = static_cast<Eigen::Index>(mode.log_dim);
    }
    if (mode.uses_metrics()) {
      if (const MetricValues* raw = telemetry.metric_at(skeleton.nodes[node], g.trace_start_us)) {
        const MetricValues z = scaler.transform(*raw);
        for (std::size_t c = 0; c < kMetricChannels; ++c) g.features(i, col + static_cast<Eigen::Index>(c)) = z[c];
      }
      // No qualifying sample: the channels stay 0, i.e. the training mean.
    }
  }
  return g;
}

std::vector<TokenList> node_documents(const GraphSkeleton& skeleton, const TraceRecord& trace,
                                      const TrialTelemetry& telemetry) {
  std::vector<TokenList> docs;
  docs.reserve(skeleton.nodes.size());
  for (Service s : skeleton.nodes) docs.push_back(telemetry.log_document(trace, s));
  return docs;
}

}  // namespace

RequestGraph attach_features(const GraphSkeleton& skeleton, const TraceRecord& trace,
                             const TrialTelemetry& telemetry, const TfidfVocab& vocab,
                             const MetricScaler& scaler, const ModalityConfig& mode) {
  std::vector<TokenList> docs;
  if (mode.uses_logs()) docs = node_documents(skeleton, trace, telemetry);
  return featurise(skeleton, trace, telemetry, docs, vocab, scaler, mode);
}

std::vector<ClassLabel> Corpus::labels() const {
  std::vector<ClassLabel> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.label);
  return out;
}

std::vector<std::string> Corpus::run_ids() const {
  std::vector<std::string> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.run_id);
  return out;
}

Corpus load_corpus(std::span<const RunSpec> specs) {
  Corpus c;
  c.specs.assign(specs.begin(), specs.end());
  c.trials.reserve(specs.size());
  for (const auto& spec : specs) c.trials.push_back(read_trial(spec.trial_dir));
  c.telemetry.reserve(c.trials.size());
  for (const auto& t : c.trials) c.telemetry.emplace_back(t);

  for (std::size_t ti = 0; ti < c.trials.size(); ++ti) {
    const Trial& trial = c.trials[ti];
    std::vector<LabelWindow> windows;
    for (const auto& w : trial.labels)
      if (w.run_id == specs[ti].run_id) windows.push_back(w);
    for (std::size_t k = 0; k < trial.traces.size(); ++k) {
      const TraceRecord& tr = trial.traces[k];
      Corpus::Entry e;
      e.trial = ti;
      e.trace = k;
      e.run_id = specs[ti].run_id;
      e.graph_id = e.run_id + "/" + tr.trace_id;
      e.skeleton = trace_to_graph(tr);
      e.label = label_graph(tr.start_us(), tr.end_us(), windows);
      c.entries.push_back(std::move(e));
    }
  }
  return c;
}

Dataset assemble_dataset(const Corpus& corpus, const ModalityConfig& mode,
                         std::span<const std::size_t> train_indices) {
  if (corpus.entries.empty()) throw Error("dataset is empty: the run specs contain no traces");
  Dataset d;
  d.modality = mode;

  std::vector<std::vector<TokenList>> docs(corpus.entries.size());
  if (mode.uses_logs()) {
    for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
      const auto& e = corpus.entries[i];
      docs[i] = node_documents(e.skeleton, corpus.trials[e.trial].traces[e.trace], corpus.telemetry[e.trial]);
    }
    std::vector<TokenList> train_docs;
    for (std::size_t i : train_indices)
      for (const auto& doc : docs.at(i)) train_docs.push_back(doc);
    VocabFit fit = fit_vocab(train_docs, mode.log_dim);
    d.vocab = std::move(fit.vocab);
    d.short_vocabulary = fit.short_vocabulary;
  }
  if (mode.uses_metrics()) {
    std::vector<MetricValues> rows;
    for (std::size_t i : train_indices) {
      const auto& e = corpus.entries.at(i);
      const std::int64_t t = corpus.trials[e.trial].traces[e.trace].start_us();
      for (Service s : e.skeleton.nodes)
        if (const MetricValues* raw = corpus.telemetry[e.trial].metric_at(s, t)) rows.push_back(*raw);
    }
    if (rows.empty()) throw ContractViolation("no training metric rows to fit the scaler");
    d.scaler.fit(rows);
  }

  d.graphs.reserve(corpus.entries.size());
  for (std::size_t i = 0; i < corpus.entries.size(); ++i) {
    const auto& e = corpus.entries[i];
    RequestGraph g = featurise(e.skeleton, corpus.trials[e.trial].traces[e.trace], corpus.telemetry[e.trial],
                               docs[i], d.vocab, d.scaler, mode);
    g.label = e.label;
    g.run_id = e.run_id;
    g.graph_id = e.graph_id;
    ++d.class_counts[index_of(g.label)];
    d.graphs.push_back(std::move(g));
  }
  return d;
}

std::string serialize_graph(const RequestGraph& g) {
  nlohmann::ordered_json j;
  j["graph_id"] = g.graph_id;
  j["run_id"] = g.run_id;
  auto nodes = nlohmann::ordered_json::array();
  for (Service s : g.nodes) nodes.push_back(to_string(s));
  j["nodes"] = std::move(nodes);
  auto edges = nlohmann::ordered_json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  auto feats = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < g.features.cols(); ++k) row.push_back(g.features(i, k));
    feats.push_back(std::move(row));
  }
  j["features"] = std::move(feats);
  j["label"] = to_string(g.label);
  j["trace_interval"] = {g.trace_start_us, g.trace_end_us};
  return j.dump();
}

RequestGraph parse_graph(std::string_view line) {
  try {
    const auto j = nlohmann::json::parse(line);
    RequestGraph g;
    g.graph_id = j.at("graph_id").get<std::string>();
    g.run_id = j.at("run_id").get<std::string>();
    for (const auto& s : j.at("nodes")) g.nodes.push_back(parse_service(s.get<std::string>()));
    for (const auto& e : j.at("edges")) g.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    const auto& feats = j.at("features");
    const auto rows = static_cast<Eigen::Index>(feats.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(feats[0].size()) : 0;
    g.features = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& row = feats[static_cast<std::size_t>(i)];
      if (static_cast<Eigen::Index>(row.size()) != cols) throw ParseError("ragged feature matrix");
      for (Eigen::Index k = 0; k < cols; ++k) g.features(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    g.label = parse_class_label(j.at("label").get<std::string>());
    g.trace_start_us = j.at("trace_interval").at(0).get<std::int64_t>();
    g.trace_end_us = j.at("trace_interval").at(1).get<std::int64_t>();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("graph row: {}", e.what()));
  }
}

nlohmann::ordered_json dataset_sidecar(const Dataset& d, std::span<const std::size_t> train_indices) {
  nlohmann::ordered_json j;
  j["modality"] = {{"mode", to_string(d.modality.mode)},
                   {"log_dim", d.modality.log_dim},
                   {"metric_dim", ModalityConfig::metric_dim},
                   {"feature_width", d.modality.feature_width()}};
  j["vocab"] = d.vocab.fitted() ? d.vocab.to_json() : nlohmann::json(nullptr);
  j["short_vocabulary"] = d.short_vocabulary;
  j["scaler"] = d.scaler.fitted() ? d.scaler.to_json() : nlohmann::json(nullptr);
  nlohmann::ordered_json counts;
  for (ClassLabel c : kAllClasses) counts[std::string(to_string(c))] = d.class_counts[index_of(c)];
  j["class_counts"] = std::move(counts);
  std::vector<std::string> train_ids;
  for (std::size_t i : train_indices) train_ids.push_back(d.graphs.at(i).graph_id);
  j["train_graph_ids"] = std::move(train_ids);
  return j;
}

void write_dataset(const fs::path& dir, const Dataset& d, std::span<const std::size_t> train_indices) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "dataset.jsonl", std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", (dir / "dataset.jsonl").string()));
    for (const auto& g : d.graphs) out << serialize_graph(g) << '\n';
  }
  std::ofstream meta(dir / "dataset.json", std::ios::binary | std::ios::trunc);
  if (!meta) throw Error(fmt::format("cannot write {}", (dir / "dataset.json").string()));
  meta << dataset_sidecar(d, train_indices).dump(2) << '\n';
}

}  // namespace svcgraph
