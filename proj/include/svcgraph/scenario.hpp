// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic trial generator for the six-service shop benchmark. A trial is
// normal user traffic over the whole duration plus one attack scenario in
// the middle half; traces, logs and per-second metric samples are derived
// from the same simulated requests so the three views agree.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "svcgraph/rng.hpp"
#include "svcgraph/telemetry.hpp"

namespace svcgraph {

struct ScenarioConfig {
  ClassLabel scenario = ClassLabel::normal;
  int duration_s = 60;
  double normal_rps = 2.5;
  double attack_rps = 1.0;
  std::uint64_t seed = 7;
  std::string run_id;
  double log_drop_fraction = 0.05;
};

// Throws ConfigError.
void validate(const ScenarioConfig& config);
double default_attack_rps(ClassLabel scenario);
ScenarioConfig scenario_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& config);

struct CallEdge {
  Service caller;
  Service callee;
  double mean_ms;
  double sd_ms;
};

struct Topology {
  std::vector<CallEdge> edges;
  // Own processing time of a root frontend span.
  double frontend_mean_ms = 4.0;
  double frontend_sd_ms = 1.5;

  static Topology standard();
  bool has_edge(Service caller, Service callee) const;
  // Latency parameters for a call; edges outside the topology get a slow
  // default so anomalous calls are still timed.
  CallEdge edge_or_default(Service caller, Service callee) const;
};

enum class Behavior : std::uint8_t { browse, login, cart_view, order, search };
inline constexpr std::size_t kBehaviorCount = 5;
std::string_view to_string(Behavior b);

// Side data the simulator keeps per span to synthesise metrics.
struct SpanLoad {
  Service service = Service::frontend;
  std::int64_t start_us = 0;
  double duration_ms = 0.0;
  bool error = false;
  double bytes_in = 0.0;
  double bytes_out = 0.0;
};

// Per-trial conditions shared by every request of the trial.
struct RequestContext {
  std::string run_id;
  std::array<double, kServiceCount> latency_multiplier{1, 1, 1, 1, 1, 1};
  double error_probability = 0.01;
};

struct GeneratedRequest {
  TraceRecord trace;
  std::vector<LogRecord> logs;
  std::vector<SpanLoad> loads;
};

GeneratedRequest generate_normal_request(Rng& rng, const Topology& topology, std::int64_t t_us,
                                         const RequestContext& context = {},
                                         std::optional<Behavior> behavior = std::nullopt);

// Additive metric shift applied to samples inside the attack window.
struct MetricEffect {
  Service service;
  MetricChannel channel;
  double delta;
};

struct AttackWindow {
  std::int64_t start_us = 0;
  std::int64_t end_us = 0;
};

struct AttackTraffic {
  std::vector<GeneratedRequest> requests;
  std::vector<MetricEffect> metric_effects;
  // Latency multipliers the attack imposes on every request in the window.
  std::array<double, kServiceCount> latency_multiplier{1, 1, 1, 1, 1, 1};
};

// Throws ContractViolation for scenario == normal.
AttackTraffic generate_attack_traffic(Rng& rng, ClassLabel scenario, const Topology& topology,
                                      AttackWindow window, double attack_rps,
                                      const RequestContext& context);

// Simulates one trial. Pure function of the config.
Trial simulate_trial(const ScenarioConfig& config);

// Default trial plan: run i gets scenarios[i % scenarios.size()], with the
// five attack classes when `scenarios` is empty.
std::vector<ScenarioConfig> make_trial_plan(std::size_t trials, std::uint64_t seed,
                                            std::span<const ClassLabel> scenarios = {},
                                            int duration_s = 60, double normal_rps = 2.5);

struct TrialEntry {
  std::string run_id;
  ClassLabel scenario;
  std::filesystem::path dir;
};

// Run-spec CSV text in input order. Throws ValidationError on duplicate ids.
std::string write_run_specs(std::span<const TrialEntry> trials);
void write_run_specs(std::span<const TrialEntry> trials, const std::filesystem::path& csv_path);

}  // namespace svcgraph
