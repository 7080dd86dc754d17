// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "svcgraph/errors.hpp"

namespace svcgraph {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr std::array<std::string_view, kServiceCount> kServiceNames = {
    "frontend", "auth", "catalog", "cart", "order", "payment"};
constexpr std::array<std::string_view, kClassCount> kClassNames = {
    "normal",     "http_flood", "bruteforce_login", "sql_injection_probe",
    "ssrf_probe", "exfiltration_sim"};
constexpr std::array<std::string_view, kMetricChannels> kChannelNames = {
    "cpu_pct",        "mem_pct",    "requests_per_s", "mean_latency_ms",   "p95_latency_ms",
    "error_rate",     "net_in_kbps", "net_out_kbps",  "active_connections"};

SpanStatus parse_status(std::string_view s) {
  if (s == "ok") return SpanStatus::ok;
  if (s == "error") return SpanStatus::error;
  throw ParseError(fmt::format("unknown span status '{}'", s));
}

LogLevel parse_level(std::string_view s) {
  if (s == "info") return LogLevel::info;
  if (s == "warn") return LogLevel::warn;
  if (s == "error") return LogLevel::error;
  throw ParseError(fmt::format("unknown log level '{}'", s));
}

ojson optional_string(const std::optional<std::string>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

std::optional<std::string> read_optional_string(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

const ojson& field(const ojson& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(fmt::format("missing field '{}'", key));
  return *it;
}

ojson span_to_json(const Span& s) {
  ojson j;
  j["span_id"] = s.span_id;
  j["parent_span_id"] = optional_string(s.parent_span_id);
  j["service"] = to_string(s.service);
  j["start_us"] = s.start_us;
  j["end_us"] = s.end_us;
  j["status"] = to_string(s.status);
  return j;
}

ojson to_json(const TraceRecord& t) {
  ojson j;
  j["trace_id"] = t.trace_id;
  j["run_id"] = t.run_id;
  ojson spans = ojson::array();
  for (const auto& s : t.spans) spans.push_back(span_to_json(s));
  j["spans"] = std::move(spans);
  return j;
}

ojson to_json(const LogRecord& l) {
  ojson j;
  j["ts_us"] = l.ts_us;
  j["service"] = to_string(l.service);
  j["level"] = to_string(l.level);
  j["message"] = l.message;
  j["trace_id"] = optional_string(l.trace_id);
  return j;
}

ojson to_json(const MetricSample& m) {
  ojson j;
  j["ts_us"] = m.ts_us;
  j["service"] = to_string(m.service);
  j["values"] = m.values;
  return j;
}

ojson to_json(const LabelWindow& w) {
  ojson j;
  j["run_id"] = w.run_id;
  j["class_label"] = to_string(w.class_label);
  j["start_us"] = w.start_us;
  j["end_us"] = w.end_us;
  return j;
}

template <typename T>
std::string serialize_all(std::span<const T> records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
    out += '\n';
  }
  return out;
}

// Wraps any exception from nlohmann or the field helpers into a ParseError
// carrying the location.
template <typename F>
auto parse_with_location(std::string_view line, const std::string& where, F&& build) {
  try {
    ojson j = ojson::parse(line);
    if (!j.is_object()) throw ParseError("expected a JSON object");
    return build(j);
  } catch (const ParseError& e) {
    throw ParseError(fmt::format("{}: {}", where, e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", where, e.what()));
  }
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("missing trial file {}", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

template <typename T, typename Parser>
std::vector<T> read_jsonl(const fs::path& path, Parser parse) {
  std::vector<T> out;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse(lines[i], fmt::format("{}:{}", path.string(), i + 1)));
  }
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << content;
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

}  // namespace

std::string_view to_string(Service s) { return kServiceNames.at(index_of(s)); }

Service parse_service(std::string_view name) {
  for (std::size_t i = 0; i < kServiceCount; ++i)
    if (kServiceNames[i] == name) return static_cast<Service>(i);
  throw ParseError(fmt::format("unknown service '{}'", name));
}

std::string_view to_string(ClassLabel c) { return kClassNames.at(index_of(c)); }

ClassLabel parse_class_label(std::string_view name) {
  for (std::size_t i = 0; i < kClassCount; ++i)
    if (kClassNames[i] == name) return static_cast<ClassLabel>(i);
  throw ParseError(fmt::format("unknown class label '{}'", name));
}

std::string_view to_string(SpanStatus s) { return s == SpanStatus::ok ? "ok" : "error"; }

std::string_view to_string(LogLevel l) {
  switch (l) {
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
  }
  return "info";
}

std::string_view to_string(MetricChannel c) { return kChannelNames.at(index_of(c)); }

std::int64_t TraceRecord::start_us() const {
  std::int64_t v = spans.empty() ? 0 : spans.front().start_us;
  for (const auto& s : spans) v = std::min(v, s.start_us);
  return v;
}

std::int64_t TraceRecord::end_us() const {
  std::int64_t v = spans.empty() ? 0 : spans.front().end_us;
  for (const auto& s : spans) v = std::max(v, s.end_us);
  return v;
}

bool windows_overlap(std::int64_t a_start, std::int64_t a_end, std::int64_t b_start,
                     std::int64_t b_end) {
  return std::max(a_start, b_start) < std::min(a_end, b_end);
}

void validate(const TraceRecord& trace) {
  if (trace.spans.empty())
    throw ValidationError(fmt::format("trace {} has no spans", trace.trace_id));
  std::unordered_set<std::string> ids;
  for (const auto& s : trace.spans) {
    if (s.end_us < s.start_us)
      throw ValidationError(
          fmt::format("trace {} span {} ends before it starts", trace.trace_id, s.span_id));
    if (!ids.insert(s.span_id).second)
      throw ValidationError(
          fmt::format("trace {} repeats span id {}", trace.trace_id, s.span_id));
  }
  std::size_t roots = 0;
  for (const auto& s : trace.spans) {
    if (!s.parent_span_id) {
      ++roots;
    } else if (!ids.contains(*s.parent_span_id)) {
      throw ValidationError(fmt::format("trace {} span {} references unknown parent {}",
                                        trace.trace_id, s.span_id, *s.parent_span_id));
    }
  }
  if (roots != 1)
    throw ValidationError(
        fmt::format("trace {} has {} root spans, expected 1", trace.trace_id, roots));
}

void validate(const LogRecord& log) {
  if (log.message.empty())
    throw ValidationError(fmt::format("log at ts {} ({}) has an empty message", log.ts_us,
                                      to_string(log.service)));
}

void validate(const MetricSample& sample) {
  for (std::size_t c = 0; c < kMetricChannels; ++c) {
    const double v = sample.values[c];
    if (!std::isfinite(v) || v < 0.0)
      throw ValidationError(fmt::format("metric sample {}@{} channel {} has invalid value {}",
                                        to_string(sample.service), sample.ts_us,
                                        kChannelNames[c], v));
  }
}

void validate(const LabelWindow& window) {
  if (window.end_us <= window.start_us)
    throw ValidationError(fmt::format("label window {}/{} has end_us <= start_us",
                                      window.run_id, to_string(window.class_label)));
}

std::string serialize_records(std::span<const TraceRecord> r) { return serialize_all(r); }
std::string serialize_records(std::span<const LogRecord> r) { return serialize_all(r); }
std::string serialize_records(std::span<const MetricSample> r) { return serialize_all(r); }
std::string serialize_records(std::span<const LabelWindow> r) { return serialize_all(r); }

TraceRecord parse_trace(std::string_view line, const std::string& where) {
  return parse_with_location(line, where, [](const ojson& j) {
    TraceRecord t;
    t.trace_id = field(j, "trace_id").get<std::string>();
    t.run_id = field(j, "run_id").get<std::string>();
    for (const auto& sj : field(j, "spans")) {
      Span s;
      s.span_id = field(sj, "span_id").get<std::string>();
      s.parent_span_id = read_optional_string(sj, "parent_span_id");
      s.service = parse_service(field(sj, "service").get<std::string>());
      s.start_us = field(sj, "start_us").get<std::int64_t>();
      s.end_us = field(sj, "end_us").get<std::int64_t>();
      s.status = parse_status(field(sj, "status").get<std::string>());
      t.spans.push_back(std::move(s));
    }
    return t;
  });
}

LogRecord parse_log(std::string_view line, const std::string& where) {
  return parse_with_location(line, where, [](const ojson& j) {
    LogRecord l;
    l.ts_us = field(j, "ts_us").get<std::int64_t>();
    l.service = parse_service(field(j, "service").get<std::string>());
    l.level = parse_level(field(j, "level").get<std::string>());
    l.message = field(j, "message").get<std::string>();
    l.trace_id = read_optional_string(j, "trace_id");
    return l;
  });
}

MetricSample parse_metric(std::string_view line, const std::string& where) {
  return parse_with_location(line, where, [](const ojson& j) {
    MetricSample m;
    m.ts_us = field(j, "ts_us").get<std::int64_t>();
    m.service = parse_service(field(j, "service").get<std::string>());
    const auto& values = field(j, "values");
    if (!values.is_array() || values.size() != kMetricChannels)
      throw ParseError(fmt::format("metric values must have exactly {} entries", kMetricChannels));
    for (std::size_t c = 0; c < kMetricChannels; ++c) m.values[c] = values[c].get<double>();
    return m;
  });
}

LabelWindow parse_label(std::string_view line, const std::string& where) {
  return parse_with_location(line, where, [](const ojson& j) {
    LabelWindow w;
    w.run_id = field(j, "run_id").get<std::string>();
    w.class_label = parse_class_label(field(j, "class_label").get<std::string>());
    w.start_us = field(j, "start_us").get<std::int64_t>();
    w.end_us = field(j, "end_us").get<std::int64_t>();
    return w;
  });
}

Trial read_trial(const fs::path& dir) {
  for (auto name : {kTracesFile, kLogsFile, kMetricsFile, kLabelsFile})
    if (!fs::exists(dir / name))
      throw NotFoundError(fmt::format("missing trial file {}", (dir / name).string()));

  Trial trial;
  trial.traces = read_jsonl<TraceRecord>(dir / kTracesFile, parse_trace);
  trial.logs = read_jsonl<LogRecord>(dir / kLogsFile, parse_log);
  trial.metrics = read_jsonl<MetricSample>(dir / kMetricsFile, parse_metric);
  trial.labels = read_jsonl<LabelWindow>(dir / kLabelsFile, parse_label);

  std::unordered_set<std::string> trace_ids;
  for (const auto& t : trial.traces) {
    validate(t);
    if (!trace_ids.insert(t.trace_id).second)
      throw ValidationError(fmt::format("duplicate trace id {}", t.trace_id));
  }
  for (const auto& l : trial.logs) {
    validate(l);
    if (l.trace_id && !trace_ids.contains(*l.trace_id))
      throw ValidationError(fmt::format("log at ts {} references unknown trace {}", l.ts_us,
                                        *l.trace_id));
  }
  for (const auto& m : trial.metrics) validate(m);
  std::set<std::string> attack_runs;
  for (const auto& w : trial.labels) {
    validate(w);
    if (w.class_label != ClassLabel::normal && !attack_runs.insert(w.run_id).second)
      throw ValidationError(fmt::format("run {} has more than one attack window", w.run_id));
  }

  std::stable_sort(trial.traces.begin(), trial.traces.end(),
                   [](const auto& a, const auto& b) { return a.start_us() < b.start_us(); });
  std::stable_sort(trial.logs.begin(), trial.logs.end(),
                   [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });
  std::stable_sort(trial.metrics.begin(), trial.metrics.end(),
                   [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });
  std::stable_sort(trial.labels.begin(), trial.labels.end(),
                   [](const auto& a, const auto& b) { return a.start_us < b.start_us; });
  return trial;
}

void write_trial(const fs::path& dir, const Trial& trial) {
  fs::create_directories(dir);
  write_file(dir / kTracesFile, serialize_records(std::span<const TraceRecord>(trial.traces)));
  write_file(dir / kLogsFile, serialize_records(std::span<const LogRecord>(trial.logs)));
  write_file(dir / kMetricsFile, serialize_records(std::span<const MetricSample>(trial.metrics)));
  write_file(dir / kLabelsFile, serialize_records(std::span<const LabelWindow>(trial.labels)));
}

std::vector<RunSpec> read_run_specs(const fs::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw NotFoundError(fmt::format("run-spec file {} not found", csv_path.string()));
  std::string line;
  if (!std::getline(in, line)) throw ParseError(fmt::format("{}: empty file", csv_path.string()));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "run_id,scenario,trial_dir")
    throw ParseError(fmt::format("{}:1: expected header 'run_id,scenario,trial_dir'",
                                 csv_path.string()));

  std::vector<RunSpec> specs;
  std::size_t line_no = 1;
  const fs::path base = csv_path.parent_path();
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 3)
      throw ParseError(fmt::format("{}:{}: expected 3 columns", csv_path.string(), line_no));
    RunSpec spec;
    spec.run_id = cols[0];
    try {
      spec.scenario = parse_class_label(cols[1]);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}:{}: {}", csv_path.string(), line_no, e.what()));
    }
    fs::path dir(cols[2]);
    spec.trial_dir = dir.is_absolute() ? dir : base / dir;
    specs.push_back(std::move(spec));
  }
  return specs;
}

std::vector<RunSpec> read_run_specs(std::span<const fs::path> csv_paths) {
  std::vector<RunSpec> all;
  std::set<std::string> seen;
  for (const auto& p : csv_paths) {
    for (auto& spec : read_run_specs(p)) {
      if (!seen.insert(spec.run_id).second)
        throw ValidationError(fmt::format("duplicate run_id {} in {}", spec.run_id, p.string()));
      all.push_back(std::move(spec));
    }
  }
  return all;
}

std::string format_run_specs(std::span<const RunSpec> specs) {
  std::string out = "run_id,scenario,trial_dir\n";
  for (const auto& s : specs)
    out += fmt::format("{},{},{}\n", s.run_id, to_string(s.scenario), s.trial_dir.generic_string());
  return out;
}

}  // namespace svcgraph
