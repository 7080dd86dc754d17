// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "svcgraph/errors.hpp"
#include "svcgraph/rng.hpp"
#include "svcgraph/scenario.hpp"
#include "svcgraph/telemetry.hpp"
#include "test_support.hpp"

using namespace svcgraph;
using svcgraph::testing::TempDir;
using svcgraph::testing::read_text;

namespace {

std::set<Service> services_of(const TraceRecord& t) {
  std::set<Service> out;
  for (const auto& s : t.spans) out.insert(s.service);
  return out;
}

// Directed caller->callee pairs from parent links.
std::set<std::pair<Service, Service>> edges_of(const TraceRecord& t) {
  std::map<std::string, Service> by_id;
  for (const auto& s : t.spans) by_id[s.span_id] = s.service;
  std::set<std::pair<Service, Service>> out;
  for (const auto& s : t.spans)
    if (s.parent_span_id) out.insert({by_id.at(*s.parent_span_id), s.service});
  return out;
}

const Span& root_of(const TraceRecord& t) {
  return *std::find_if(t.spans.begin(), t.spans.end(), [](const Span& s) { return !s.parent_span_id; });
}

ScenarioConfig config(ClassLabel scenario, std::uint64_t seed = 7) {
  ScenarioConfig c;
  c.scenario = scenario;
  c.attack_rps = default_attack_rps(scenario);
  c.seed = seed;
  c.run_id = std::string("t_") + std::string(to_string(scenario));
  return c;
}

const LabelWindow* attack_window(const Trial& trial) {
  for (const auto& w : trial.labels)
    if (w.class_label != ClassLabel::normal) return &w;
  return nullptr;
}

}  // namespace

TEST_CASE("topology is the fixed acyclic call graph") {
  const Topology topo = Topology::standard();
  using S = Service;
  const std::set<std::pair<S, S>> expected = {{S::frontend, S::auth},  {S::frontend, S::catalog},
                                              {S::frontend, S::cart},  {S::frontend, S::order},
                                              {S::order, S::payment},  {S::order, S::cart},
                                              {S::cart, S::catalog}};
  std::set<std::pair<S, S>> got;
  for (const auto& e : topo.edges) got.insert({e.caller, e.callee});
  CHECK(got == expected);
  CHECK(topo.has_edge(S::order, S::payment));
  CHECK_FALSE(topo.has_edge(S::payment, S::order));
  // Nothing calls frontend, so every path starts there and no cycle can close through it.
  for (const auto& e : topo.edges) CHECK(e.callee != S::frontend);
}

TEST_CASE("normal behaviors follow their paths") {
  const Topology topo = Topology::standard();
  Rng rng(3);
  using S = Service;
  SUBCASE("login") {
    const auto r = generate_normal_request(rng, topo, 1'000'000, {}, Behavior::login);
    CHECK(r.trace.spans.size() == 2);
    CHECK(services_of(r.trace) == std::set<S>{S::frontend, S::auth});
    CHECK(edges_of(r.trace).size() == 1);
  }
  SUBCASE("order") {
    const auto r = generate_normal_request(rng, topo, 1'000'000, {}, Behavior::order);
    CHECK(services_of(r.trace) == std::set<S>{S::frontend, S::order, S::payment, S::cart});
  }
  SUBCASE("cart view") {
    const auto r = generate_normal_request(rng, topo, 1'000'000, {}, Behavior::cart_view);
    CHECK(edges_of(r.trace) == std::set<std::pair<S, S>>{{S::frontend, S::cart}, {S::cart, S::catalog}});
  }
  SUBCASE("random behaviors: frontend root, topology edges, info logs with trace ids") {
    RequestContext clean;
    clean.error_probability = 0.0;
    for (int i = 0; i < 500; ++i) {
      const auto r = generate_normal_request(rng, topo, 1'000'000 + i, clean);
      CHECK(root_of(r.trace).service == S::frontend);
      CHECK_NOTHROW(validate(r.trace));
      for (const auto& [a, b] : edges_of(r.trace)) CHECK(topo.has_edge(a, b));
      CHECK_FALSE(r.logs.empty());
      for (const auto& l : r.logs) {
        CHECK(l.trace_id == r.trace.trace_id);
        CHECK(l.level == LogLevel::info);
      }
    }
  }
  SUBCASE("error logs only come from failed spans") {
    RequestContext flaky;
    flaky.error_probability = 0.3;
    for (int i = 0; i < 300; ++i) {
      const auto r = generate_normal_request(rng, topo, 1'000'000 + i, flaky);
      std::set<Service> failed;
      for (const auto& s : r.trace.spans)
        if (s.status == SpanStatus::error) failed.insert(s.service);
      for (const auto& l : r.logs)
        if (l.level != LogLevel::info) CHECK(failed.contains(l.service));
    }
  }
}

TEST_CASE("attack traffic signatures") {
  const Topology topo = Topology::standard();
  Rng rng(5);
  RequestContext ctx;
  ctx.run_id = "r";
  const AttackWindow window{0, 100'000'000};

  SUBCASE("normal is rejected") {
    CHECK_THROWS_AS(generate_attack_traffic(rng, ClassLabel::normal, topo, window, 1.0, ctx),
                    ContractViolation);
  }
  SUBCASE("bruteforce: every request logs a failed login") {
    const auto a = generate_attack_traffic(rng, ClassLabel::bruteforce_login, topo, window, 1.0, ctx);
    REQUIRE(a.requests.size() >= 50);
    std::size_t failed = 0;
    for (const auto& r : a.requests) {
      CHECK(services_of(r.trace) == std::set<Service>{Service::frontend, Service::auth});
      for (const auto& l : r.logs)
        if (l.service == Service::auth && l.message.find("login failed") != std::string::npos) ++failed;
    }
    CHECK(failed >= a.requests.size());
  }
  SUBCASE("sql injection: quoted fragments, mostly errors") {
    const auto a = generate_attack_traffic(rng, ClassLabel::sql_injection_probe, topo, window, 2.0, ctx);
    REQUIRE(a.requests.size() >= 100);
    std::size_t errors = 0;
    for (const auto& r : a.requests) {
      bool fragment = false;
      for (const auto& l : r.logs)
        fragment |= l.message.find("'union select'") != std::string::npos ||
                    l.message.find("'or 1=1'") != std::string::npos;
      CHECK(fragment);
      errors += std::any_of(r.trace.spans.begin(), r.trace.spans.end(),
                            [](const Span& s) { return s.status == SpanStatus::error; });
    }
    CHECK(errors * 2 > a.requests.size());
  }
  SUBCASE("ssrf: off-topology edge and internal fetch log") {
    const auto a = generate_attack_traffic(rng, ClassLabel::ssrf_probe, topo, window, 1.0, ctx);
    REQUIRE_FALSE(a.requests.empty());
    bool off_topology = false;
    for (const auto& r : a.requests) {
      for (const auto& [x, y] : edges_of(r.trace)) off_topology |= !topo.has_edge(x, y);
      CHECK(std::any_of(r.logs.begin(), r.logs.end(), [](const LogRecord& l) {
        return l.message.find("outbound fetch internal address") != std::string::npos;
      }));
    }
    CHECK(off_topology);
  }
}

TEST_CASE("simulate_trial: labels, consistency, determinism") {
  SUBCASE("normal trial has only the normal window") {
    const Trial t = simulate_trial(config(ClassLabel::normal));
    REQUIRE(t.labels.size() == 1);
    CHECK(t.labels[0].class_label == ClassLabel::normal);
    CHECK(t.labels[0].end_us - t.labels[0].start_us == 60'000'000);
  }
  for (auto cls : {ClassLabel::http_flood, ClassLabel::bruteforce_login, ClassLabel::sql_injection_probe,
                   ClassLabel::ssrf_probe, ClassLabel::exfiltration_sim}) {
    CAPTURE(to_string(cls));
    const auto cfg = config(cls, 21);
    const Trial t = simulate_trial(cfg);
    REQUIRE(t.labels.size() == 2);
    const LabelWindow* w = attack_window(t);
    REQUIRE(w != nullptr);
    const auto& normal = t.labels[0].class_label == ClassLabel::normal ? t.labels[0] : t.labels[1];
    // Middle half of the trial.
    const auto len = normal.end_us - normal.start_us;
    CHECK(w->start_us - normal.start_us == len / 4);
    CHECK(w->end_us - w->start_us == len / 2);

    std::set<std::string> ids;
    for (const auto& tr : t.traces) {
      ids.insert(tr.trace_id);
      CHECK(tr.run_id == cfg.run_id);
    }
    CHECK(ids.size() == t.traces.size());
    std::size_t dropped = 0;
    for (const auto& l : t.logs) {
      if (!l.trace_id) ++dropped;
      else CHECK(ids.contains(*l.trace_id));
    }
    CHECK(dropped > 0);
    CHECK(dropped < t.logs.size() / 5);

    // Every span's service has a metric sample within 15 s of the trace interval.
    std::map<Service, std::vector<std::int64_t>> ts;
    for (const auto& m : t.metrics) ts[m.service].push_back(m.ts_us);
    for (const auto& tr : t.traces)
      for (const auto& s : tr.spans) {
        const auto& v = ts[s.service];
        const auto it = std::lower_bound(v.begin(), v.end(), tr.start_us() - 15'000'000);
        CHECK((it != v.end() && *it <= tr.end_us() + 15'000'000));
      }

    TempDir a("sim_a"), b("sim_b");
    write_trial(a.path(), t);
    write_trial(b.path(), simulate_trial(cfg));
    for (auto f : {kTracesFile, kLogsFile, kMetricsFile, kLabelsFile})
      CHECK(read_text(a.path() / std::string(f)) == read_text(b.path() / std::string(f)));
    // And the files read back as valid.
    CHECK(read_trial(a.path()).traces.size() == t.traces.size());
  }
}

TEST_CASE("http flood raises trace rate and frontend latency") {
  ScenarioConfig c = config(ClassLabel::http_flood, 9);
  c.normal_rps = 5.0;
  c.attack_rps = 120.0;
  c.duration_s = 120;
  const Trial t = simulate_trial(c);
  const LabelWindow* w = attack_window(t);
  REQUIRE(w != nullptr);

  std::size_t inside = 0, outside = 0;
  for (const auto& tr : t.traces)
    (tr.start_us() >= w->start_us && tr.start_us() < w->end_us ? inside : outside)++;
  const double attack_seconds = static_cast<double>(w->end_us - w->start_us) / 1e6;
  const double normal_seconds = 120.0 - attack_seconds;
  CHECK(static_cast<double>(inside) / attack_seconds >=
        10.0 * static_cast<double>(outside) / normal_seconds);

  double in_sum = 0, out_sum = 0;
  int in_n = 0, out_n = 0;
  for (const auto& m : t.metrics) {
    if (m.service != Service::frontend) continue;
    const double v = m.values[index_of(MetricChannel::mean_latency_ms)];
    if (m.ts_us > w->start_us && m.ts_us <= w->end_us) in_sum += v, ++in_n;
    else if (m.ts_us <= w->start_us || m.ts_us > w->end_us + 2'000'000) out_sum += v, ++out_n;
  }
  REQUIRE(in_n > 0);
  REQUIRE(out_n > 0);
  CHECK(in_sum / in_n > 2.0 * out_sum / out_n);
}

TEST_CASE("config validation and json") {
  ScenarioConfig c = config(ClassLabel::ssrf_probe);
  CHECK_NOTHROW(validate(c));
  c.duration_s = 29;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = config(ClassLabel::ssrf_probe);
  c.normal_rps = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);

  const auto j = to_json(config(ClassLabel::exfiltration_sim));
  const auto back = scenario_config_from_json(j);
  CHECK(back.scenario == ClassLabel::exfiltration_sim);
  CHECK(back.attack_rps == default_attack_rps(ClassLabel::exfiltration_sim));
  CHECK_THROWS_AS(scenario_config_from_json(nlohmann::json{{"scenario", "teleport"}}), Error);
}

TEST_CASE("trial plan and run-spec CSV") {
  const auto plan = make_trial_plan(50, 7);
  REQUIRE(plan.size() == 50);
  std::map<ClassLabel, int> per_class;
  std::vector<TrialEntry> entries;
  for (const auto& c : plan) {
    ++per_class[c.scenario];
    entries.push_back({c.run_id, c.scenario, c.run_id});
  }
  CHECK(per_class.size() == 5);
  for (const auto& [cls, n] : per_class) CHECK(n == 10);

  const std::string csv = write_run_specs(entries);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 51);
  CHECK(csv.rfind("run_id,scenario,trial_dir\n", 0) == 0);
  CHECK(write_run_specs(std::span<const TrialEntry>{}) == "run_id,scenario,trial_dir\n");
  entries.push_back(entries.front());
  CHECK_THROWS_AS(write_run_specs(entries), ValidationError);
}

TEST_CASE("corpus class sizes follow the expected ordering") {
  // Label each trace by window overlap and compare class totals over the default 50-trial plan.
  std::map<ClassLabel, std::size_t> counts;
  for (const auto& c : make_trial_plan(50, 7)) {
    const Trial t = simulate_trial(c);
    const LabelWindow* w = attack_window(t);
    for (const auto& tr : t.traces) {
      const bool hit = w && windows_overlap(tr.start_us(), tr.end_us(), w->start_us, w->end_us);
      ++counts[hit ? w->class_label : ClassLabel::normal];
    }
  }
  using C = ClassLabel;
  CHECK(counts[C::http_flood] > counts[C::normal]);
  CHECK(counts[C::normal] > counts[C::bruteforce_login]);
  CHECK(counts[C::bruteforce_login] > counts[C::sql_injection_probe]);
  CHECK(counts[C::sql_injection_probe] > counts[C::exfiltration_sim]);
  CHECK(counts[C::exfiltration_sim] > counts[C::ssrf_probe]);
}
