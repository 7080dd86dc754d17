// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
// if any fails. Usage: acceptance <work-dir>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <fmt/format.h>

#include "model_fixtures.hpp"
#include "oracles.hpp"
#include "svcgraph/experiment.hpp"
#include "svcgraph/graph.hpp"
#include "svcgraph/metrics.hpp"
#include "svcgraph/report.hpp"
#include "svcgraph/scenario.hpp"
#include "svcgraph/split.hpp"
#include "svcgraph/text_features.hpp"
#include "test_support.hpp"

using namespace svcgraph;
using namespace svcgraph::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

fs::path g_work;

// Runs the command-line tool, output to a log file. Returns the exit status.
int tool(const std::string& args, const std::string& log) {
  const std::string cmd =
      fmt::format("\"{}\" {} > \"{}\" 2>&1", SVCGRAPH_BINARY, args, (g_work / (log + ".log")).string());
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Relative path -> contents, skipping wall-clock files.
std::map<std::string, std::string> stable_files(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).string();
    if (rel.find("runtime") != std::string::npos) continue;
    out[rel] = read_text(e.path());
  }
  return out;
}

std::string first_difference(const std::map<std::string, std::string>& a, const std::map<std::string, std::string>& b) {
  for (const auto& [k, v] : a) {
    const auto it = b.find(k);
    if (it == b.end()) return k + " missing in second run";
    if (it->second != v) return k + " differs";
  }
  for (const auto& [k, v] : b)
    if (!a.count(k)) return k + " missing in first run";
  return "";
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

const CellResult* find_cell(const std::vector<CellResult>& cells, CellSpec spec) {
  for (const auto& c : cells)
    if (c.cell == spec && c.ok()) return &c;
  return nullptr;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto t0 = Clock::now();
  Rng rng(1701);
  int gcn_ok = 0, gcn_n = 0, mlp_ok = 0, mlp_n = 0;
  double worst = 0.0;
  for (int attempt = 0; attempt < 400 && gcn_n < 20; ++attempt) {
    auto m = GcnModel::initialize(4, 5, kClassCount, 3000 + static_cast<std::uint64_t>(attempt));
    for (Eigen::Index i = 0; i < m.head_b1.size(); ++i) m.head_b1(i) = rng.uniform(-0.2, 0.2);
    for (Eigen::Index i = 0; i < m.head_b2.size(); ++i) m.head_b2(i) = rng.uniform(-0.2, 0.2);
    std::vector<RequestGraph> gs;
    for (int k = 0; k < 3; ++k) gs.push_back(random_graph(rng, 4, 4));
    double margin = 1.0;
    for (const auto& g : gs) margin = std::min(margin, relu_margin(m, g));
    if (margin < 1e-3) continue;
    std::vector<const RequestGraph*> p;
    std::vector<std::size_t> y;
    for (const auto& g : gs) {
      p.push_back(&g);
      y.push_back(index_of(g.label));
    }
    auto lg = loss_and_grad(m, p, y, nullptr);
    const auto refs = m.param_refs(lg.grad);
    const double err = max_gradient_error(refs, [&] { return loss_and_grad(m, p, y, nullptr).loss; });
    worst = std::max(worst, err);
    gcn_ok += err < 1e-4;
    ++gcn_n;
  }
  for (int attempt = 0; attempt < 400 && mlp_n < 20; ++attempt) {
    auto m = MlpModel::initialize(6, 5, kClassCount, 7000 + static_cast<std::uint64_t>(attempt));
    for (Eigen::Index i = 0; i < m.b1.size(); ++i) m.b1(i) = rng.uniform(-0.2, 0.2);
    for (Eigen::Index i = 0; i < m.b2.size(); ++i) m.b2(i) = rng.uniform(-0.2, 0.2);
    std::vector<FlatSample> batch;
    for (int k = 0; k < 3; ++k) batch.push_back(random_sample(rng, 6));
    double margin = 1.0;
    for (const auto& s : batch) margin = std::min(margin, relu_margin(m, s));
    if (margin < 1e-3) continue;
    std::vector<const FlatSample*> ptr;
    for (const auto& s : batch) ptr.push_back(&s);
    auto g = mlp_loss_and_grad(m, ptr);
    const std::array<ParamRef, 4> refs = {param_ref(m.W1, g.W1), param_ref(m.b1, g.b1), param_ref(m.W2, g.W2),
                                          param_ref(m.b2, g.b2)};
    const double err = max_gradient_error(refs, [&] { return mlp_loss_and_grad(m, ptr).loss; });
    worst = std::max(worst, err);
    mlp_ok += err < 1e-4;
    ++mlp_n;
  }
  const double secs = seconds_since(t0);
  return {gcn_n >= 20 && mlp_n >= 20 && gcn_ok == gcn_n && mlp_ok == mlp_n && secs < 10.0,
          fmt::format("gcn {}/{}, mlp {}/{} within 1e-4, max rel err {:.2e}, {:.2f} s", gcn_ok, gcn_n, mlp_ok, mlp_n,
                      worst, secs)};
}

Outcome adjacency() {
  bool ok = true;
  auto near = [&](double a, double b) { ok = ok && std::abs(a - b) < 1e-12; };
  const auto one = normalize_adjacency(1, {});
  near(one(0, 0), 1.0);
  const auto two = normalize_adjacency(2, {{0, 1}, {1, 0}});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) near(two(i, j), 0.5);
  const auto path = normalize_adjacency(3, {{0, 1}, {1, 0}, {1, 2}, {2, 1}});
  const double s6 = 1.0 / std::sqrt(6.0);
  const double want[3][3] = {{0.5, s6, 0.0}, {s6, 1.0 / 3.0, s6}, {0.0, s6, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) near(path(i, j), want[i][j]);
  const bool hand = ok;

  Rng rng(2718);
  int symmetric = 0;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto g = random_graph(rng, 1);
    const auto a = normalize_adjacency(g.nodes.size(), g.edges);
    const auto ref = oracle::normalized_adjacency(g.nodes.size(), {g.edges.begin(), g.edges.end()});
    symmetric += (a - a.transpose()).cwiseAbs().maxCoeff() == 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      for (std::size_t j = 0; j < g.nodes.size(); ++j)
        worst = std::max(worst, std::abs(a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) - ref[i][j]));
  }
  return {hand && symmetric == 1000 && worst < 1e-12,
          fmt::format("hand cases {}, symmetric {}/1000, max oracle diff {:.1e}", hand ? "ok" : "WRONG", symmetric,
                      worst)};
}

Outcome permutation() {
  Rng rng(3141);
  const auto m = GcnModel::initialize(6, 16, kClassCount, 12);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto g = random_graph(rng, 6);
    std::vector<std::size_t> perm(g.nodes.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    worst = std::max(worst, (forward(m, g).logits - forward(m, relabel(g, perm)).logits).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-10, fmt::format("100 graphs, max logit diff {:.1e}", worst)};
}

Outcome tfidf() {
  static const std::vector<std::string> pool = {"get", "post", "login", "failed", "num", "auth", "cart", "or"};
  Rng rng(161);
  double worst = 0.0;
  bool vocab_ok = true;
  for (int c = 0; c < 50; ++c) {
    std::vector<TokenList> docs(1 + rng.index(10));
    const auto used = 1 + rng.index(pool.size());
    for (auto& d : docs)
      for (std::uint64_t i = 0, n = rng.index(9); i < n; ++i) d.push_back(pool[rng.index(used)]);
    const std::size_t dim = 1 + rng.index(8);
    const auto fit = fit_vocab(docs, dim);
    const auto ref = oracle::fit_tfidf(docs, dim);
    vocab_ok = vocab_ok && fit.vocab.tokens() == ref.tokens;
    if (fit.vocab.tokens() != ref.tokens) continue;
    for (const auto& d : docs) {
      const auto got = transform(d, fit.vocab);
      const auto want = oracle::tfidf(d, ref);
      for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    }
  }
  return {vocab_ok && worst < 1e-10, fmt::format("50 corpora, vocab {}, max diff {:.1e}", vocab_ok ? "ok" : "WRONG", worst)};
}

Outcome metrics() {
  Rng rng(1618);
  int exact = 0;
  bool rows = true;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng.index(500);
    std::vector<std::size_t> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = rng.index(kClassCount);
      pred[i] = rng.bernoulli(0.5) ? truth[i] : rng.index(kClassCount);
    }
    const auto m = compute_metrics(truth, pred);
    const auto ref = oracle::recount(truth, pred, kClassCount);
    bool same = true;
    for (std::size_t k = 0; k < kClassCount; ++k) {
      long col = 0, row = 0;
      for (std::size_t j = 0; j < kClassCount; ++j) {
        col += static_cast<long>(m.confusion[j][k]);
        row += static_cast<long>(m.confusion[k][j]);
      }
      const long tp = static_cast<long>(m.confusion[k][k]);
      same = same && tp == ref.tp[k] && col - tp == ref.fp[k] && row - tp == ref.fn[k] &&
             static_cast<long>(m.per_class[k].support) == ref.support[k];
      const double p = oracle::safe_div(static_cast<double>(ref.tp[k]), static_cast<double>(ref.tp[k] + ref.fp[k]));
      const double r = oracle::safe_div(static_cast<double>(ref.tp[k]), static_cast<double>(ref.tp[k] + ref.fn[k]));
      same = same && m.per_class[k].precision == p && m.per_class[k].recall == r &&
             m.per_class[k].f1 == oracle::safe_div(2 * p * r, p + r);
      rows = rows && row == ref.support[k];
    }
    exact += same;
  }
  return {exact == 100 && rows, fmt::format("{}/100 exact, confusion rows {}", exact, rows ? "equal supports" : "WRONG")};
}

Outcome split_integrity(const Corpus& corpus) {
  std::size_t runs_shared = 0;
  auto trial_check = [&](std::span<const ClassLabel> labels, std::span<const std::string> ids, std::uint64_t seed) {
    SplitSpec spec{SplitKind::trial_level, 0.3, seed};
    const auto r = split(labels, ids, spec);  // throws ContractViolation on overlap
    std::set<std::string> train, test;
    for (auto i : r.train) train.insert(ids[i]);
    for (auto i : r.test) test.insert(ids[i]);
    for (const auto& id : test) runs_shared += train.count(id);
  };
  const auto labels = corpus.labels();
  const auto ids = corpus.run_ids();
  trial_check(labels, ids, 7);

  Rng rng(99);
  std::size_t strat_bad = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t runs = 2 + rng.index(40);
    std::vector<ClassLabel> l;
    std::vector<std::string> r;
    for (std::size_t k = 0; k < runs; ++k) {
      const auto attack = kAllClasses[rng.index(kClassCount)];
      for (std::size_t g = 0, n = 1 + rng.index(50); g < n; ++g) {
        l.push_back(rng.bernoulli(0.5) ? attack : ClassLabel::normal);
        r.push_back(fmt::format("run{}", k));
      }
    }
    trial_check(l, r, static_cast<std::uint64_t>(t));
    SplitSpec spec{SplitKind::random_stratified, rng.uniform(0.1, 0.9), static_cast<std::uint64_t>(t)};
    const auto s = split(l, r, spec);
    for (ClassLabel c : kAllClasses) {
      const auto support = static_cast<double>(std::count(l.begin(), l.end(), c));
      const auto in_test =
          static_cast<double>(std::count_if(s.test.begin(), s.test.end(), [&](std::size_t i) { return l[i] == c; }));
      strat_bad += std::abs(in_test - spec.test_size * support) > 1.0;
    }
  }
  const auto s = split(labels, ids, SplitSpec{});
  for (ClassLabel c : kAllClasses) {
    const auto support = static_cast<double>(std::count(labels.begin(), labels.end(), c));
    const auto in_test = static_cast<double>(
        std::count_if(s.test.begin(), s.test.end(), [&](std::size_t i) { return labels[i] == c; }));
    strat_bad += std::abs(in_test - 0.3 * support) > 1.0;
  }
  return {runs_shared == 0 && strat_bad == 0,
          fmt::format("trial-level shared runs {}, stratified classes off by >1: {}", runs_shared, strat_bad)};
}

Outcome determinism(const fs::path& specs) {
  std::vector<std::string> problems;
  const auto sa = g_work / "sim_a", sb = g_work / "sim_b";
  if (tool(fmt::format("simulate --seed 7 --output-dir \"{}\"", sb.string()), "simulate_b") != 0)
    problems.push_back("simulate failed");
  if (const auto d = first_difference(stable_files(sa), stable_files(sb)); !d.empty())
    problems.push_back("simulate: " + d);

  for (const char* run : {"train_a", "train_b"})
    if (tool(fmt::format("train --run-spec-file \"{}\" --epochs 5 --split trial_level --output-dir \"{}\"",
                         specs.string(), (g_work / run).string()),
             run) != 0)
      problems.push_back(std::string(run) + " failed");
  if (const auto d = first_difference(stable_files(g_work / "train_a"), stable_files(g_work / "train_b")); !d.empty())
    problems.push_back("train: " + d);

  if (tool(fmt::format("ablate --run-spec-file \"{}\" --epochs 5 --log-dim 16 --hidden-dim 32 --test-size 0.3 "
                       "--seed 7 --output-dir \"{}\"",
                       specs.string(), (g_work / "ablate_b").string()),
           "ablate_b") != 0)
    problems.push_back("ablate_b failed");
  const auto a = stable_files(g_work / "ablate_a"), b = stable_files(g_work / "ablate_b");
  if (const auto d = first_difference(a, b); !d.empty()) problems.push_back("ablate: " + d);

  return {problems.empty() && !a.empty(),
          problems.empty() ? fmt::format("simulate, train and ablate identical across two runs ({} ablate files)",
                                         a.size())
                           : problems.front()};
}

Outcome leakage(const fs::path& root) {
  // Ten short trials; the token "zebracorn" is added to every log line of the
  // runs that the trial-level split sends to the test side.
  std::vector<RunSpec> specs;
  for (const auto& c : make_trial_plan(10, 11, {}, 30)) {
    write_trial(root / c.run_id, simulate_trial(c));
    specs.push_back({c.run_id, c.scenario, root / c.run_id});
  }
  Corpus corpus = load_corpus(specs);
  ExperimentConfig cfg;
  cfg.log_dim = 4096;  // large enough that any training-side token is kept
  const auto s = ExperimentRunner(corpus, cfg).split_for(SplitKind::trial_level);
  std::set<std::string> test_runs;
  for (auto i : s.test) test_runs.insert(corpus.entries[i].run_id);
  for (const auto& spec : specs) {
    if (!test_runs.count(spec.run_id)) continue;
    Trial t = read_trial(spec.trial_dir);
    for (auto& l : t.logs) l.message += " zebracorn";
    write_trial(spec.trial_dir, t);
  }
  corpus = load_corpus(specs);
  ExperimentRunner runner(corpus, cfg);
  const Dataset& d = runner.dataset_for(SplitKind::trial_level, Modality::logs_plus_metrics);
  const bool absent = d.vocab.find("zebracorn") == d.vocab.size();

  // Control: fitting on every graph does pick the token up.
  std::vector<std::size_t> all(corpus.entries.size());
  std::iota(all.begin(), all.end(), 0);
  const Dataset leaky = assemble_dataset(corpus, ModalityConfig{Modality::logs_plus_metrics, 4096}, all);
  const bool control = leaky.vocab.find("zebracorn") < leaky.vocab.size();
  return {absent && control && !test_runs.empty(),
          fmt::format("{} test runs carry the token; vocab ({} tokens) {}; all-data control {}", test_runs.size(),
                      d.vocab.size(), absent ? "excludes it" : "CONTAINS it", control ? "includes it" : "MISSES it")};
}

Outcome random_split_gcn(const fs::path& specs) {
  const auto dir = g_work / "gcn100";
  const auto t0 = Clock::now();
  const int rc = tool(fmt::format("train --run-spec-file \"{}\" --epochs 100 --split random_stratified --modality "
                                  "logs_plus_metrics --model gcn --output-dir \"{}\"",
                                  specs.string(), dir.string()),
                      "gcn100");
  const double secs = seconds_since(t0);
  if (rc != 0) return {false, fmt::format("train exited {}", rc)};
  const auto cells = read_cells(dir);
  const auto* c = find_cell(cells, {ModelKind::gcn, Modality::logs_plus_metrics, SplitKind::random_stratified});
  if (!c) return {false, "no result"};
  return {c->metrics.accuracy >= 0.90 && c->metrics.macro_f1 >= 0.90 && secs < 15 * 60,
          fmt::format("accuracy {:.4f}, macro F1 {:.4f}, {:.1f} s", c->metrics.accuracy, c->metrics.macro_f1, secs)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <work-dir>\n";
    return 2;
  }
  g_work = argv[1];
  fs::remove_all(g_work);
  fs::create_directories(g_work);

  std::map<int, std::pair<std::string, Outcome>> results;
  auto record = [&](int id, const std::string& name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    results[id] = {name, o};
    fmt::print("{} {:>2} {}: {}\n", o.pass ? "PASS" : "FAIL", id, name, o.detail);
    std::fflush(stdout);
  };

  record(1, "gradient oracle", gradient_oracle);
  record(2, "adjacency normalization", adjacency);
  record(3, "permutation invariance", permutation);
  record(4, "tf-idf oracle", tfidf);
  record(5, "metrics oracle", metrics);

  // The 50-trial seed-7 corpus and the 5-epoch grid on it.
  const auto specs = g_work / "sim_a" / "run_specs.csv";
  const int sim_rc = tool(fmt::format("simulate --seed 7 --output-dir \"{}\"", (g_work / "sim_a").string()), "simulate_a");
  const int ablate_rc = sim_rc != 0 ? -1
                                    : tool(fmt::format("ablate --run-spec-file \"{}\" --epochs 5 --log-dim 16 "
                                                       "--hidden-dim 32 --test-size 0.3 --seed 7 --output-dir \"{}\"",
                                                       specs.string(), (g_work / "ablate_a").string()),
                                           "ablate_a");
  std::vector<CellResult> cells;
  if (ablate_rc == 0) cells = read_cells(g_work / "ablate_a");
  std::optional<Corpus> corpus;
  if (sim_rc == 0) corpus = load_corpus(read_run_specs(std::vector<fs::path>{specs}));

  record(6, "split integrity", [&]() -> Outcome {
    if (!corpus) return {false, "simulate failed"};
    return split_integrity(*corpus);
  });
  record(7, "determinism", [&] { return determinism(specs); });
  record(8, "leakage guard", [&] { return leakage(g_work / "leak"); });
  record(9, "random-split GCN, 100 epochs", [&] { return random_split_gcn(specs); });

  const CellSpec gcn_trial{ModelKind::gcn, Modality::logs_plus_metrics, SplitKind::trial_level};
  const CellSpec gcn_random{ModelKind::gcn, Modality::logs_plus_metrics, SplitKind::random_stratified};
  auto cell = [&](CellSpec s) -> const CellResult& {
    const auto* c = find_cell(cells, s);
    if (!c) throw std::runtime_error("missing or failed cell " + s.name());
    return *c;
  };

  record(10, "trial-level below random split", [&]() -> Outcome {
    const double t = cell(gcn_trial).metrics.macro_f1, r = cell(gcn_random).metrics.macro_f1;
    return {t < r, fmt::format("GCN macro F1 trial-level {:.4f} vs random {:.4f}", t, r)};
  });
  record(11, "modality ordering", [&]() -> Outcome {
    std::map<Modality, const CellResult*> m;
    for (Modality mod : kAllModalities) m[mod] = &cell({ModelKind::gcn, mod, SplitKind::trial_level});
    bool strict_min = true;
    for (Modality mod : kAllModalities)
      if (mod != Modality::trace_only)
        strict_min = strict_min && m[Modality::trace_only]->metrics.macro_f1 < m[mod]->metrics.macro_f1;
    const double lpm = m[Modality::logs_plus_metrics]->metrics.accuracy, lo = m[Modality::logs_only]->metrics.accuracy;
    return {strict_min && lpm >= lo,
            fmt::format("macro F1 trace {:.4f} logs {:.4f} metrics {:.4f} logs+metrics {:.4f}; accuracy logs+metrics "
                        "{:.4f} vs logs {:.4f}",
                        m[Modality::trace_only]->metrics.macro_f1, m[Modality::logs_only]->metrics.macro_f1,
                        m[Modality::metrics_only]->metrics.macro_f1, m[Modality::logs_plus_metrics]->metrics.macro_f1,
                        lpm, lo)};
  });
  record(12, "forest vs GCN, trial-level", [&]() -> Outcome {
    const double f = cell({ModelKind::forest, Modality::logs_plus_metrics, SplitKind::trial_level}).metrics.accuracy;
    const double g = cell(gcn_trial).metrics.accuracy;
    return {f >= g, fmt::format("accuracy forest {:.4f} vs GCN {:.4f}", f, g)};
  });
  record(13, "per-class recall pattern", [&]() -> Outcome {
    const auto r = cell(gcn_trial).metrics.recalls();
    const double flood = r[index_of(ClassLabel::http_flood)];
    const double brute = r[index_of(ClassLabel::bruteforce_login)];
    const bool is_max = std::all_of(r.begin(), r.end(), [&](double x) { return x <= flood; });
    return {is_max && brute < flood,
            fmt::format("recalls [{:.3f}]; http_flood {:.4f}, bruteforce_login {:.4f}", fmt::join(r, ", "), flood,
                        brute)};
  });
  record(14, "runtime shape", [&]() -> Outcome {
    if (!corpus) return {false, "simulate failed"};
    // Training times are noisy on a shared machine; compare medians of the
    // two grid runs plus three extra runs of each cell.
    const auto cells_b = read_cells(g_work / "ablate_b");
    ExperimentRunner runner(*corpus, ExperimentConfig{});
    std::string detail;
    bool ok = true;
    for (SplitKind s : {SplitKind::trial_level, SplitKind::random_stratified}) {
      const CellSpec f{ModelKind::forest, Modality::logs_plus_metrics, s}, g{ModelKind::gcn, Modality::logs_plus_metrics, s};
      std::vector<double> tf = {cell(f).train_seconds}, tg = {cell(g).train_seconds};
      if (const auto* c = find_cell(cells_b, f)) tf.push_back(c->train_seconds);
      if (const auto* c = find_cell(cells_b, g)) tg.push_back(c->train_seconds);
      runner.prepare(std::vector<CellSpec>{f, g});
      for (int rep = 0; rep < 3; ++rep) {
        tf.push_back(runner.run_cell(f).train_seconds);
        tg.push_back(runner.run_cell(g).train_seconds);
      }
      const double mf = median(tf), mg = median(tg);
      ok = ok && mf < mg;
      detail += fmt::format("{} train s forest {:.3f} vs GCN {:.3f}; ", to_string(s), mf, mg);
    }
    double slowest = 0.0;
    for (const auto& c : cells) slowest = std::max(slowest, c.predict_ms_per_graph);
    ok = ok && slowest < 1.0 && cells.size() == default_grid().size();
    detail += fmt::format("max predict {:.4f} ms/graph over {} cells", slowest, cells.size());
    return {ok, detail};
  });

  const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.second.second.pass; });
  fmt::print("{} of {} criteria passed\n", results.size() - static_cast<std::size_t>(failed), results.size());
  return failed == 0 ? 0 : 1;
}
