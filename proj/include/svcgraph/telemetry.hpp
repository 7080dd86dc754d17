// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Telemetry data model shared by the simulator, the graph builder and the
// experiment runner: spans/traces, service logs, metric samples and label
// windows, plus their JSONL encoding and the trial directory layout.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace svcgraph {

enum class Service : std::uint8_t { frontend, auth, catalog, cart, order, payment };
inline constexpr std::size_t kServiceCount = 6;
inline constexpr std::array<Service, kServiceCount> kAllServices = {
    Service::frontend, Service::auth,  Service::catalog,
    Service::cart,     Service::order, Service::payment};

std::string_view to_string(Service s);
// Throws ParseError for names outside the six-service set.
Service parse_service(std::string_view name);
inline std::size_t index_of(Service s) { return static_cast<std::size_t>(s); }

enum class SpanStatus : std::uint8_t { ok, error };
enum class LogLevel : std::uint8_t { info, warn, error };

enum class ClassLabel : std::uint8_t {
  normal,
  http_flood,
  bruteforce_login,
  sql_injection_probe,
  ssrf_probe,
  exfiltration_sim,
};
inline constexpr std::size_t kClassCount = 6;
inline constexpr std::array<ClassLabel, kClassCount> kAllClasses = {
    ClassLabel::normal,     ClassLabel::http_flood, ClassLabel::bruteforce_login,
    ClassLabel::sql_injection_probe, ClassLabel::ssrf_probe, ClassLabel::exfiltration_sim};

std::string_view to_string(ClassLabel c);
ClassLabel parse_class_label(std::string_view name);
inline std::size_t index_of(ClassLabel c) { return static_cast<std::size_t>(c); }

std::string_view to_string(SpanStatus s);
std::string_view to_string(LogLevel l);

// Metric channel layout, fixed order.
enum class MetricChannel : std::uint8_t {
  cpu_pct,
  mem_pct,
  requests_per_s,
  mean_latency_ms,
  p95_latency_ms,
  error_rate,
  net_in_kbps,
  net_out_kbps,
  active_connections,
};
inline constexpr std::size_t kMetricChannels = 9;
using MetricValues = std::array<double, kMetricChannels>;
std::string_view to_string(MetricChannel c);
inline std::size_t index_of(MetricChannel c) { return static_cast<std::size_t>(c); }

struct Span {
  std::string span_id;
  std::optional<std::string> parent_span_id;
  Service service = Service::frontend;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
  SpanStatus status = SpanStatus::ok;

  bool operator==(const Span&) const = default;
};

struct TraceRecord {
  std::string trace_id;
  std::string run_id;
  std::vector<Span> spans;

  std::int64_t start_us() const;
  std::int64_t end_us() const;
  bool operator==(const TraceRecord&) const = default;
};

struct LogRecord {
  std::int64_t ts_us = 0;
  Service service = Service::frontend;
  LogLevel level = LogLevel::info;
  std::string message;
  std::optional<std::string> trace_id;

  bool operator==(const LogRecord&) const = default;
};

struct MetricSample {
  std::int64_t ts_us = 0;
  Service service = Service::frontend;
  MetricValues values{};

  bool operator==(const MetricSample&) const = default;
};

struct LabelWindow {
  std::string run_id;
  ClassLabel class_label = ClassLabel::normal;
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;

  bool operator==(const LabelWindow&) const = default;
};

// Half-open overlap: true iff max(a_start, b_start) < min(a_end, b_end).
bool windows_overlap(std::int64_t a_start, std::int64_t a_end, std::int64_t b_start,
                     std::int64_t b_end);

// Invariant checks; throw ValidationError naming the record.
void validate(const TraceRecord& trace);
void validate(const LogRecord& log);
void validate(const MetricSample& sample);
void validate(const LabelWindow& window);

// One JSON object per line, fields in declaration order.
std::string serialize_records(std::span<const TraceRecord> records);
std::string serialize_records(std::span<const LogRecord> records);
std::string serialize_records(std::span<const MetricSample> records);
std::string serialize_records(std::span<const LabelWindow> records);

// Single-line parsers. `where` is used in error messages ("file:line").
TraceRecord parse_trace(std::string_view line, const std::string& where);
LogRecord parse_log(std::string_view line, const std::string& where);
MetricSample parse_metric(std::string_view line, const std::string& where);
LabelWindow parse_label(std::string_view line, const std::string& where);

struct Trial {
  std::vector<TraceRecord> traces;
  std::vector<LogRecord> logs;
  std::vector<MetricSample> metrics;
  std::vector<LabelWindow> labels;
};

inline constexpr std::string_view kTracesFile = "traces.jsonl";
inline constexpr std::string_view kLogsFile = "logs.jsonl";
inline constexpr std::string_view kMetricsFile = "metrics.jsonl";
inline constexpr std::string_view kLabelsFile = "labels.jsonl";

// Reads the four JSONL files of a trial directory. Records come back sorted
// by start timestamp (stable, so ties keep file order).
Trial read_trial(const std::filesystem::path& dir);
void write_trial(const std::filesystem::path& dir, const Trial& trial);

// Run-spec CSV: header `run_id,scenario,trial_dir`.
struct RunSpec {
  std::string run_id;
  ClassLabel scenario = ClassLabel::normal;
  std::filesystem::path trial_dir;

  bool operator==(const RunSpec&) const = default;
};

// Relative trial_dir entries are resolved against the CSV's own directory.
std::vector<RunSpec> read_run_specs(const std::filesystem::path& csv_path);
// Merges several spec files in order; duplicate run ids are rejected.
std::vector<RunSpec> read_run_specs(std::span<const std::filesystem::path> csv_paths);
std::string format_run_specs(std::span<const RunSpec> specs);

}  // namespace svcgraph
