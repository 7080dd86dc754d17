// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "svcgraph/errors.hpp"

namespace svcgraph {

namespace {

constexpr std::int64_t kTrialEpochUs = 1'700'000'000'000'000;
constexpr std::int64_t kUsPerSecond = 1'000'000;
constexpr std::int64_t kScrapeIntervalUs = 1'000'000;
constexpr std::int64_t kAggregationUs = 2'000'000;

constexpr std::array<double, kBehaviorCount> kBehaviorWeights = {0.30, 0.15, 0.20, 0.15, 0.20};
constexpr std::array<double, kServiceCount> kResponseBytes = {4000, 350, 2500, 1200, 900, 400};
constexpr std::array<std::string_view, 8> kUserNames = {"admin", "alice", "bob",  "carol",
                                                        "dave",  "eve",   "root", "test"};

// Per-trial operating conditions. Trials differ in load, latency and resource
// baselines the way repeated deployments of the same stack do.
struct TrialProfile {
  double rate_scale = 1.0;
  double attack_scale = 1.0;
  double latency_scale = 1.0;
  std::array<double, kServiceCount> base_cpu{};
  std::array<double, kServiceCount> base_mem{};
};

TrialProfile draw_profile(Rng& rng) {
  TrialProfile p;
  p.rate_scale = rng.lognormal_mean_sd(1.0, 0.2);
  p.attack_scale = rng.lognormal_mean_sd(1.0, 0.25);
  p.latency_scale = rng.lognormal_mean_sd(1.0, 0.15);
  for (std::size_t s = 0; s < kServiceCount; ++s) {
    p.base_cpu[s] = rng.uniform(8.0, 20.0);
    p.base_mem[s] = rng.uniform(30.0, 50.0);
  }
  return p;
}

// One planned span. Children run sequentially inside the parent.
struct CallPlan {
  Service service = Service::frontend;
  double own_ms = 1.0;
  int http_status = 200;
  LogLevel level = LogLevel::info;
  std::string message;  // empty: standard request line
  double bytes_in = 0.0;
  double bytes_out = 0.0;
  std::vector<CallPlan> children;
};

std::string trace_id_from(Rng& rng) { return fmt::format("{:016x}", rng.next_u64()); }

std::string default_message(int status, double duration_ms) {
  const auto ms = static_cast<long long>(std::llround(duration_ms));
  if (status < 400) return fmt::format("request completed status={} duration_ms={}", status, ms);
  if (status == 401 || status == 403)
    return fmt::format("request rejected status={} duration_ms={}", status, ms);
  if (status == 503)
    return fmt::format("request failed status={} upstream timeout duration_ms={}", status, ms);
  return fmt::format("request failed status={} duration_ms={}", status, ms);
}

class RequestBuilder {
 public:
  RequestBuilder(Rng& rng, const Topology& topology, const RequestContext& context)
      : rng_(rng), topology_(topology), context_(context) {}

  CallPlan call(Service caller, Service callee) {
    const CallEdge e = topology_.edge_or_default(caller, callee);
    CallPlan p;
    p.service = callee;
    p.own_ms = rng_.lognormal_mean_sd(e.mean_ms, e.sd_ms) * context_.latency_multiplier[index_of(callee)];
    p.bytes_in = rng_.lognormal_mean_sd(300.0, 90.0);
    p.bytes_out = rng_.lognormal_mean_sd(kResponseBytes[index_of(callee)],
                                         0.3 * kResponseBytes[index_of(callee)]);
    if (rng_.bernoulli(context_.error_probability)) p.http_status = 503;
    return p;
  }

  CallPlan root() {
    CallPlan p;
    p.service = Service::frontend;
    p.own_ms = rng_.lognormal_mean_sd(topology_.frontend_mean_ms, topology_.frontend_sd_ms) *
               context_.latency_multiplier[index_of(Service::frontend)];
    p.bytes_in = rng_.lognormal_mean_sd(500.0, 150.0);
    p.bytes_out = rng_.lognormal_mean_sd(kResponseBytes[0], 0.3 * kResponseBytes[0]);
    if (rng_.bernoulli(context_.error_probability)) p.http_status = 503;
    return p;
  }

  GeneratedRequest build(CallPlan plan, std::int64_t t_us) {
    propagate_errors(plan);
    GeneratedRequest req;
    req.trace.trace_id = trace_id_from(rng_);
    req.trace.run_id = context_.run_id;
    int counter = 0;
    emit(plan, std::nullopt, t_us, req, counter);
    return req;
  }

 private:
  static void propagate_errors(CallPlan& p) {
    for (auto& c : p.children) {
      propagate_errors(c);
      if (c.http_status >= 500 && p.http_status < 400) p.http_status = 503;
    }
  }

  // Returns the span end time.
  std::int64_t emit(const CallPlan& plan, const std::optional<std::string>& parent,
                    std::int64_t start_us, GeneratedRequest& req, int& counter) {
    const std::string id = fmt::format("s{}", ++counter);
    const std::size_t slot = req.trace.spans.size();
    req.trace.spans.push_back({});
    const auto own_us = static_cast<std::int64_t>(std::llround(plan.own_ms * 1000.0));
    std::int64_t t = start_us + own_us / 2;
    for (const auto& child : plan.children) {
      t += 100 + static_cast<std::int64_t>(rng_.index(200));
      t = emit(child, id, t, req, counter);
    }
    const std::int64_t end = t + (own_us - own_us / 2);

    Span& span = req.trace.spans[slot];
    span.span_id = id;
    span.parent_span_id = parent;
    span.service = plan.service;
    span.start_us = start_us;
    span.end_us = end;
    span.status = plan.http_status >= 400 ? SpanStatus::error : SpanStatus::ok;

    const double duration_ms = static_cast<double>(end - start_us) / 1000.0;
    LogRecord log;
    log.ts_us = end;
    log.service = plan.service;
    if (plan.message.empty()) {
      log.message = default_message(plan.http_status, duration_ms);
      log.level = plan.http_status >= 500   ? LogLevel::error
                  : plan.http_status >= 400 ? LogLevel::warn
                                            : LogLevel::info;
    } else {
      log.message = plan.message;
      log.level = plan.level;
    }
    log.trace_id = req.trace.trace_id;
    req.logs.push_back(std::move(log));

    req.loads.push_back({plan.service, start_us, duration_ms, plan.http_status >= 400,
                         plan.bytes_in, plan.bytes_out});
    return end;
  }

  Rng& rng_;
  const Topology& topology_;
  const RequestContext& context_;
};

Behavior draw_behavior(Rng& rng) {
  double u = rng.uniform();
  for (std::size_t i = 0; i < kBehaviorCount; ++i) {
    if (u < kBehaviorWeights[i]) return static_cast<Behavior>(i);
    u -= kBehaviorWeights[i];
  }
  return Behavior::search;
}

std::vector<std::int64_t> poisson_arrivals(Rng& rng, std::int64_t start_us, std::int64_t end_us,
                                           double rate_per_s) {
  std::vector<std::int64_t> out;
  double t = static_cast<double>(start_us);
  while (true) {
    t += rng.exponential(rate_per_s) * kUsPerSecond;
    if (t >= static_cast<double>(end_us)) break;
    out.push_back(static_cast<std::int64_t>(t));
  }
  return out;
}

GeneratedRequest attack_request(Rng& rng, ClassLabel scenario, const Topology& topology,
                                std::int64_t t_us, const RequestContext& ctx) {
  RequestBuilder b(rng, topology, ctx);
  CallPlan root = b.root();
  switch (scenario) {
    case ClassLabel::http_flood: {
      root.bytes_in = rng.lognormal_mean_sd(200.0, 50.0);
      CallPlan c = b.call(Service::frontend, Service::catalog);
      if (rng.bernoulli(0.2)) c.http_status = 503;
      root.children.push_back(std::move(c));
      break;
    }
    case ClassLabel::bruteforce_login: {
      CallPlan a = b.call(Service::frontend, Service::auth);
      const bool rejected = rng.bernoulli(0.9);
      a.http_status = rejected ? 401 : 200;
      a.level = LogLevel::warn;
      a.message = fmt::format("login failed invalid password user={}",
                              kUserNames[rng.index(kUserNames.size())]);
      root.http_status = a.http_status;
      root.children.push_back(std::move(a));
      break;
    }
    case ClassLabel::sql_injection_probe: {
      CallPlan c = b.call(Service::frontend, Service::catalog);
      const bool failed = rng.bernoulli(0.8);
      c.http_status = failed ? 500 : 200;
      c.level = failed ? LogLevel::error : LogLevel::warn;
      c.message = rng.bernoulli(0.5) ? "query rejected near 'union select' param=q"
                                     : "query rejected near 'or 1=1' param=id";
      if (failed) root.http_status = 500;
      root.children.push_back(std::move(c));
      break;
    }
    case ClassLabel::ssrf_probe: {
      CallPlan o = b.call(Service::frontend, Service::order);
      o.own_ms *= rng.lognormal_mean_sd(5.0, 1.5);
      o.level = LogLevel::warn;
      o.message = fmt::format("outbound fetch internal address 10.0.{}.{}", rng.index(4),
                              1 + rng.index(254));
      const Service target = rng.bernoulli(0.5) ? Service::auth : Service::catalog;
      o.children.push_back(b.call(Service::order, target));
      if (rng.bernoulli(0.5)) {
        o.http_status = 502;
        root.http_status = 502;
      }
      root.children.push_back(std::move(o));
      break;
    }
    case ClassLabel::exfiltration_sim: {
      CallPlan c = b.call(Service::frontend, Service::catalog);
      const double inflation = rng.uniform(10.0, 50.0);
      c.bytes_out *= inflation;
      root.bytes_out *= inflation;
      c.message = fmt::format("bulk export completed response_size={} rows={}",
                              static_cast<long long>(c.bytes_out), 100 + rng.index(5000));
      root.children.push_back(std::move(c));
      break;
    }
    case ClassLabel::normal:
      throw ContractViolation("attack_request called for the normal scenario");
  }
  return b.build(std::move(root), t_us);
}

struct ScenarioSignature {
  std::array<double, kServiceCount> latency{1, 1, 1, 1, 1, 1};
  std::vector<MetricEffect> effects;
};

ScenarioSignature signature_for(ClassLabel scenario) {
  using S = Service;
  using M = MetricChannel;
  ScenarioSignature sig;
  switch (scenario) {
    case ClassLabel::http_flood:
      sig.latency[index_of(S::frontend)] = 5.0;
      sig.latency[index_of(S::catalog)] = 2.5;
      sig.effects = {{S::frontend, M::cpu_pct, 30.0},
                     {S::catalog, M::cpu_pct, 20.0},
                     {S::frontend, M::mem_pct, 5.0}};
      break;
    case ClassLabel::bruteforce_login:
      sig.latency[index_of(S::auth)] = 1.3;
      sig.effects = {{S::auth, M::cpu_pct, 12.0}};
      break;
    case ClassLabel::sql_injection_probe:
      sig.latency[index_of(S::catalog)] = 1.4;
      sig.effects = {{S::catalog, M::cpu_pct, 10.0}};
      break;
    case ClassLabel::ssrf_probe:
      sig.latency[index_of(S::order)] = 1.5;
      sig.effects = {{S::order, M::cpu_pct, 8.0}};
      break;
    case ClassLabel::exfiltration_sim:
      sig.latency[index_of(S::catalog)] = 1.5;
      sig.effects = {{S::catalog, M::cpu_pct, 6.0}, {S::catalog, M::mem_pct, 8.0}};
      break;
    case ClassLabel::normal:
      break;
  }
  return sig;
}

double percentile95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

std::vector<MetricSample> synthesise_metrics(Rng& rng, const std::vector<SpanLoad>& loads,
                                             const TrialProfile& profile, const Topology& topology,
                                             std::int64_t t0, std::int64_t t1,
                                             AttackWindow window,
                                             const std::vector<MetricEffect>& effects) {
  std::array<std::vector<const SpanLoad*>, kServiceCount> by_service;
  for (const auto& l : loads) by_service[index_of(l.service)].push_back(&l);
  for (auto& v : by_service)
    std::stable_sort(v.begin(), v.end(),
                     [](const SpanLoad* a, const SpanLoad* b) { return a->start_us < b->start_us; });

  std::array<double, kServiceCount> idle_latency{};
  idle_latency[0] = topology.frontend_mean_ms;
  for (const auto& e : topology.edges) idle_latency[index_of(e.callee)] = e.mean_ms;

  const double agg_s = static_cast<double>(kAggregationUs) / kUsPerSecond;
  std::vector<MetricSample> out;
  for (std::int64_t ts = t0 + kScrapeIntervalUs; ts <= t1; ts += kScrapeIntervalUs) {
    for (std::size_t s = 0; s < kServiceCount; ++s) {
      const auto& v = by_service[s];
      auto lo = std::upper_bound(v.begin(), v.end(), ts - kAggregationUs,
                                 [](std::int64_t t, const SpanLoad* l) { return t < l->start_us; });
      auto hi = std::upper_bound(v.begin(), v.end(), ts,
                                 [](std::int64_t t, const SpanLoad* l) { return t < l->start_us; });
      std::vector<double> durations;
      double errors = 0, bytes_in = 0, bytes_out = 0;
      for (auto it = lo; it != hi; ++it) {
        durations.push_back((*it)->duration_ms);
        errors += (*it)->error ? 1.0 : 0.0;
        bytes_in += (*it)->bytes_in;
        bytes_out += (*it)->bytes_out;
      }
      const double n = static_cast<double>(durations.size());
      MetricValues m{};
      const double rps = n / agg_s;
      double mean_lat = idle_latency[s] * profile.latency_scale;
      double p95 = mean_lat;
      if (n > 0) {
        mean_lat = 0;
        for (double d : durations) mean_lat += d;
        mean_lat /= n;
        p95 = percentile95(durations);
      }
      const double conns = rps * mean_lat / 1000.0;
      m[index_of(MetricChannel::requests_per_s)] = rps;
      m[index_of(MetricChannel::mean_latency_ms)] = mean_lat;
      m[index_of(MetricChannel::p95_latency_ms)] = p95;
      m[index_of(MetricChannel::error_rate)] = n > 0 ? errors / n : 0.0;
      m[index_of(MetricChannel::net_in_kbps)] = bytes_in * 8.0 / 1000.0 / agg_s;
      m[index_of(MetricChannel::net_out_kbps)] = bytes_out * 8.0 / 1000.0 / agg_s;
      m[index_of(MetricChannel::cpu_pct)] = profile.base_cpu[s] + 1.2 * rps + rng.normal(0.0, 1.5);
      m[index_of(MetricChannel::mem_pct)] = profile.base_mem[s] + 0.5 * conns + rng.normal(0.0, 0.5);
      m[index_of(MetricChannel::active_connections)] = conns + std::abs(rng.normal(0.0, 0.3));

      if (ts > window.start_us && ts <= window.end_us) {
        for (const auto& e : effects)
          if (index_of(e.service) == s) m[index_of(e.channel)] += e.delta * profile.attack_scale;
      }
      m[index_of(MetricChannel::cpu_pct)] = std::clamp(m[index_of(MetricChannel::cpu_pct)], 0.0, 100.0);
      m[index_of(MetricChannel::mem_pct)] = std::clamp(m[index_of(MetricChannel::mem_pct)], 0.0, 100.0);
      for (auto& x : m) x = std::max(x, 0.0);
      out.push_back({ts, static_cast<Service>(s), m});
    }
  }
  return out;
}

}  // namespace

void validate(const ScenarioConfig& c) {
  if (c.duration_s < 30)
    throw ConfigError(fmt::format("duration_s must be >= 30, got {}", c.duration_s));
  if (!(c.normal_rps > 0.0) || !(c.attack_rps > 0.0))
    throw ConfigError("normal_rps and attack_rps must be positive");
  if (!(c.log_drop_fraction >= 0.0 && c.log_drop_fraction <= 1.0))
    throw ConfigError("log_drop_fraction must lie in [0, 1]");
  if (c.run_id.empty()) throw ConfigError("run_id must not be empty");
}

double default_attack_rps(ClassLabel scenario) {
  switch (scenario) {
    case ClassLabel::http_flood: return 25.0;
    case ClassLabel::bruteforce_login: return 5.0;
    case ClassLabel::sql_injection_probe: return 4.0;
    case ClassLabel::exfiltration_sim: return 3.0;
    case ClassLabel::ssrf_probe: return 2.25;
    case ClassLabel::normal: return 1.0;
  }
  return 1.0;
}

ScenarioConfig scenario_config_from_json(const nlohmann::json& j) {
  ScenarioConfig c;
  try {
    c.scenario = parse_class_label(j.at("scenario").get<std::string>());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("scenario config: {}", e.what()));
  }
  c.attack_rps = default_attack_rps(c.scenario);
  c.duration_s = j.value("duration_s", c.duration_s);
  c.normal_rps = j.value("normal_rps", c.normal_rps);
  c.attack_rps = j.value("attack_rps", c.attack_rps);
  c.seed = j.value("seed", c.seed);
  c.run_id = j.value("run_id", c.run_id);
  c.log_drop_fraction = j.value("log_drop_fraction", c.log_drop_fraction);
  validate(c);
  return c;
}

nlohmann::json to_json(const ScenarioConfig& c) {
  return {{"scenario", std::string(to_string(c.scenario))},
          {"duration_s", c.duration_s},
          {"normal_rps", c.normal_rps},
          {"attack_rps", c.attack_rps},
          {"seed", c.seed},
          {"run_id", c.run_id},
          {"log_drop_fraction", c.log_drop_fraction}};
}

Topology Topology::standard() {
  using S = Service;
  Topology t;
  t.edges = {
      {S::frontend, S::auth, 8.0, 3.0},   {S::frontend, S::catalog, 12.0, 4.0},
      {S::frontend, S::cart, 7.0, 2.5},   {S::frontend, S::order, 15.0, 5.0},
      {S::order, S::payment, 25.0, 8.0},  {S::order, S::cart, 7.0, 2.5},
      {S::cart, S::catalog, 10.0, 3.5},
  };
  return t;
}

bool Topology::has_edge(Service caller, Service callee) const {
  return std::any_of(edges.begin(), edges.end(), [&](const CallEdge& e) {
    return e.caller == caller && e.callee == callee;
  });
}

CallEdge Topology::edge_or_default(Service caller, Service callee) const {
  for (const auto& e : edges)
    if (e.caller == caller && e.callee == callee) return e;
  return {caller, callee, 40.0, 15.0};
}

std::string_view to_string(Behavior b) {
  switch (b) {
    case Behavior::browse: return "browse";
    case Behavior::login: return "login";
    case Behavior::cart_view: return "cart_view";
    case Behavior::order: return "order";
    case Behavior::search: return "search";
  }
  return "browse";
}

GeneratedRequest generate_normal_request(Rng& rng, const Topology& topology, std::int64_t t_us,
                                         const RequestContext& context,
                                         std::optional<Behavior> behavior) {
  const Behavior b = behavior ? *behavior : draw_behavior(rng);
  RequestBuilder builder(rng, topology, context);
  CallPlan root = builder.root();
  using S = Service;
  switch (b) {
    case Behavior::browse:
    case Behavior::search:
      root.children.push_back(builder.call(S::frontend, S::catalog));
      break;
    case Behavior::login:
      root.children.push_back(builder.call(S::frontend, S::auth));
      break;
    case Behavior::cart_view: {
      CallPlan cart = builder.call(S::frontend, S::cart);
      cart.children.push_back(builder.call(S::cart, S::catalog));
      root.children.push_back(std::move(cart));
      break;
    }
    case Behavior::order: {
      CallPlan order = builder.call(S::frontend, S::order);
      order.children.push_back(builder.call(S::order, S::payment));
      order.children.push_back(builder.call(S::order, S::cart));
      root.children.push_back(std::move(order));
      break;
    }
  }
  return builder.build(std::move(root), t_us);
}

AttackTraffic generate_attack_traffic(Rng& rng, ClassLabel scenario, const Topology& topology,
                                      AttackWindow window, double attack_rps,
                                      const RequestContext& context) {
  if (scenario == ClassLabel::normal)
    throw ContractViolation("generate_attack_traffic requires an attack scenario");
  const ScenarioSignature sig = signature_for(scenario);
  AttackTraffic traffic;
  traffic.metric_effects = sig.effects;
  RequestContext ctx = context;
  for (std::size_t s = 0; s < kServiceCount; ++s) {
    traffic.latency_multiplier[s] = sig.latency[s];
    ctx.latency_multiplier[s] *= sig.latency[s];
  }
  for (std::int64_t t : poisson_arrivals(rng, window.start_us, window.end_us, attack_rps))
    traffic.requests.push_back(attack_request(rng, scenario, topology, t, ctx));
  return traffic;
}

Trial simulate_trial(const ScenarioConfig& config) {
  validate(config);
  const std::uint64_t trial_seed = derive_seed(config.seed, config.run_id);
  Rng profile_rng(derive_seed(trial_seed, "profile"));
  Rng normal_rng(derive_seed(trial_seed, "normal"));
  Rng attack_rng(derive_seed(trial_seed, "attack"));
  Rng drop_rng(derive_seed(trial_seed, "log-drop"));
  Rng metric_rng(derive_seed(trial_seed, "metrics"));

  const TrialProfile profile = draw_profile(profile_rng);
  const Topology topology = Topology::standard();
  const std::int64_t t0 = kTrialEpochUs;
  const std::int64_t t1 = t0 + static_cast<std::int64_t>(config.duration_s) * kUsPerSecond;
  const std::int64_t span = t1 - t0;
  const AttackWindow window{t0 + span / 4, t0 + 3 * span / 4};
  const bool is_attack = config.scenario != ClassLabel::normal;

  RequestContext base;
  base.run_id = config.run_id;
  for (auto& m : base.latency_multiplier) m = profile.latency_scale;

  std::vector<GeneratedRequest> requests;
  AttackTraffic attack;
  if (is_attack) {
    attack = generate_attack_traffic(attack_rng, config.scenario, topology, window,
                                     config.attack_rps * profile.attack_scale, base);
  }
  RequestContext in_window = base;
  for (std::size_t s = 0; s < kServiceCount; ++s) in_window.latency_multiplier[s] *= attack.latency_multiplier[s];

  for (std::int64_t t : poisson_arrivals(normal_rng, t0, t1, config.normal_rps * profile.rate_scale)) {
    const bool inside = is_attack && t >= window.start_us && t < window.end_us;
    requests.push_back(generate_normal_request(normal_rng, topology, t, inside ? in_window : base));
  }
  for (auto& r : attack.requests) requests.push_back(std::move(r));
  std::stable_sort(requests.begin(), requests.end(), [](const auto& a, const auto& b) {
    return a.trace.start_us() < b.trace.start_us();
  });

  Trial trial;
  std::vector<SpanLoad> loads;
  std::unordered_set<std::string> ids;
  for (auto& r : requests) {
    // Ids are 64 random bits; a collision gets a deterministic suffix.
    std::string id = r.trace.trace_id;
    for (int k = 1; !ids.insert(id).second; ++k) id = fmt::format("{}-{}", r.trace.trace_id, k);
    if (id != r.trace.trace_id) {
      for (auto& l : r.logs) l.trace_id = id;
      r.trace.trace_id = id;
    }
    for (auto& l : r.logs) trial.logs.push_back(std::move(l));
    loads.insert(loads.end(), r.loads.begin(), r.loads.end());
    trial.traces.push_back(std::move(r.trace));
  }
  std::stable_sort(trial.logs.begin(), trial.logs.end(),
                   [](const auto& a, const auto& b) { return a.ts_us < b.ts_us; });
  for (auto& l : trial.logs)
    if (drop_rng.bernoulli(config.log_drop_fraction)) l.trace_id.reset();

  trial.metrics = synthesise_metrics(metric_rng, loads, profile, topology, t0, t1,
                                     is_attack ? window : AttackWindow{}, attack.metric_effects);

  trial.labels.push_back({config.run_id, ClassLabel::normal, t0, t1});
  if (is_attack) trial.labels.push_back({config.run_id, config.scenario, window.start_us, window.end_us});
  return trial;
}

std::vector<ScenarioConfig> make_trial_plan(std::size_t trials, std::uint64_t seed,
                                            std::span<const ClassLabel> scenarios, int duration_s,
                                            double normal_rps) {
  static constexpr std::array<ClassLabel, 5> kAttacks = {
      ClassLabel::http_flood, ClassLabel::bruteforce_login, ClassLabel::sql_injection_probe,
      ClassLabel::ssrf_probe, ClassLabel::exfiltration_sim};
  std::span<const ClassLabel> cycle = scenarios.empty() ? std::span<const ClassLabel>(kAttacks) : scenarios;
  std::vector<ScenarioConfig> plan;
  for (std::size_t i = 0; i < trials; ++i) {
    ScenarioConfig c;
    c.scenario = cycle[i % cycle.size()];
    c.duration_s = duration_s;
    c.normal_rps = normal_rps;
    c.attack_rps = default_attack_rps(c.scenario);
    c.seed = seed;
    c.run_id = fmt::format("run_{:03d}_{}", i + 1, to_string(c.scenario));
    plan.push_back(std::move(c));
  }
  return plan;
}

std::string write_run_specs(std::span<const TrialEntry> trials) {
  std::set<std::string> seen;
  std::vector<RunSpec> specs;
  for (const auto& t : trials) {
    if (!seen.insert(t.run_id).second)
      throw ValidationError(fmt::format("duplicate run_id {}", t.run_id));
    specs.push_back({t.run_id, t.scenario, t.dir});
  }
  return format_run_specs(specs);
}

void write_run_specs(std::span<const TrialEntry> trials, const std::filesystem::path& csv_path) {
  const std::string text = write_run_specs(trials);
  if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
  std::ofstream out(csv_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", csv_path.string()));
  out << text;
}

}  // namespace svcgraph
