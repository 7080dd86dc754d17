// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "svcgraph/errors.hpp"
#include "svcgraph/experiment.hpp"
#include "svcgraph/graph.hpp"
#include "svcgraph/report.hpp"
#include "svcgraph/scenario.hpp"

namespace svcgraph::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::vector<std::string> run_spec_files;
  int epochs = 100;
  std::size_t log_dim = 16;
  std::size_t hidden_dim = 32;
  double test_size = 0.3;
  std::uint64_t seed = 7;
  std::string output_dir;
  std::string modality = "logs_plus_metrics";
  std::string split = "random_stratified";
  std::string model = "gcn";
  std::size_t jobs = 1;
  std::size_t trials = 50;
  int duration_s = 60;
  double normal_rps = 2.5;
};

struct State {
  Options simulate, build, train, evaluate, ablate, report;
  CLI::App* sim_cmd = nullptr;
  CLI::App* build_cmd = nullptr;
  CLI::App* train_cmd = nullptr;
  CLI::App* eval_cmd = nullptr;
  CLI::App* ablate_cmd = nullptr;
  CLI::App* report_cmd = nullptr;
};

void add_specs(CLI::App* cmd, Options& o) {
  cmd->add_option("--run-spec-file", o.run_spec_files, "Run-spec CSV (run_id,scenario,trial_dir); repeatable")
      ->required()
      ->take_all();
}

void add_seed(CLI::App* cmd, Options& o) { cmd->add_option("--seed", o.seed, "Seed for every random stream")->capture_default_str(); }

void add_split(CLI::App* cmd, Options& o, bool with_kind) {
  cmd->add_option("--test-size", o.test_size, "Test fraction in (0, 1)")->capture_default_str();
  if (with_kind)
    cmd->add_option("--split", o.split, "random_stratified or trial_level")->capture_default_str();
}

void add_model(CLI::App* cmd, Options& o) {
  cmd->add_option("--epochs", o.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--log-dim", o.log_dim, "TF-IDF vocabulary size per node")->capture_default_str();
  cmd->add_option("--hidden-dim", o.hidden_dim, "GCN hidden width")->capture_default_str();
}

void add_output(CLI::App* cmd, Options& o, const std::string& def) {
  o.output_dir = def;
  cmd->add_option("--output-dir", o.output_dir, "Output directory")->capture_default_str();
}

void add_jobs(CLI::App* cmd, Options& o) {
  cmd->add_option("--jobs", o.jobs, "Worker threads; 1 is the canonical deterministic path")->capture_default_str();
}

void build_app(CLI::App& app, State& s) {
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  s.sim_cmd = app.add_subcommand("simulate", "Simulate trials and write a run-spec CSV");
  s.sim_cmd->add_option("--trials", s.simulate.trials, "Number of trials, cycled over the five attacks")
      ->capture_default_str();
  s.sim_cmd->add_option("--duration-s", s.simulate.duration_s, "Trial length in seconds (>= 30)")->capture_default_str();
  s.sim_cmd->add_option("--normal-rps", s.simulate.normal_rps, "Background request rate")->capture_default_str();
  add_seed(s.sim_cmd, s.simulate);
  add_output(s.sim_cmd, s.simulate, "data");
  add_jobs(s.sim_cmd, s.simulate);

  s.build_cmd = app.add_subcommand("build-graphs", "Build featurised request-graph datasets");
  add_specs(s.build_cmd, s.build);
  s.build.modality = "";
  s.build_cmd->add_option("--modality", s.build.modality, "One modality; all four when omitted");
  add_split(s.build_cmd, s.build, true);
  s.build_cmd->add_option("--log-dim", s.build.log_dim, "TF-IDF vocabulary size per node")->capture_default_str();
  add_seed(s.build_cmd, s.build);
  add_output(s.build_cmd, s.build, "out/graphs");

  for (auto [cmd, opts, name, help] :
       {std::tuple{&s.train_cmd, &s.train, "train", "Train one model on one split/modality cell"},
        std::tuple{&s.eval_cmd, &s.evaluate, "evaluate", "Score a trained cell on its test side and report"}}) {
    *cmd = app.add_subcommand(name, help);
    add_specs(*cmd, *opts);
    (*cmd)->add_option("--model", opts->model, "gcn, forest or mlp")->capture_default_str();
    (*cmd)->add_option("--modality", opts->modality, "trace_only, logs_only, metrics_only, logs_plus_metrics")
        ->capture_default_str();
    add_split(*cmd, *opts, true);
    add_model(*cmd, *opts);
    add_seed(*cmd, *opts);
    add_output(*cmd, *opts, "out/train");
  }

  s.ablate_cmd = app.add_subcommand("ablate", "Run the full split x model x modality grid and report");
  s.ablate.epochs = 5;
  add_specs(s.ablate_cmd, s.ablate);
  add_model(s.ablate_cmd, s.ablate);
  add_split(s.ablate_cmd, s.ablate, false);
  add_seed(s.ablate_cmd, s.ablate);
  add_output(s.ablate_cmd, s.ablate, "out/ablate");
  add_jobs(s.ablate_cmd, s.ablate);

  s.report_cmd = app.add_subcommand("report", "Re-emit report files from saved cell results");
  add_output(s.report_cmd, s.report, "out/ablate");
}

ExperimentConfig experiment_config(const Options& o) {
  ExperimentConfig c;
  c.epochs = o.epochs;
  c.log_dim = o.log_dim;
  c.hidden_dim = o.hidden_dim;
  c.test_size = o.test_size;
  c.seed = o.seed;
  c.jobs = o.jobs;
  return c;
}

CellSpec cell_spec(const Options& o) {
  return {parse_model_kind(o.model), parse_modality(o.modality), parse_split_kind(o.split)};
}

// Flag checks that must pass before any work starts. Throws ConfigError.
void validate_options(const State& s, const CLI::App& app) {
  if (s.sim_cmd->parsed()) {
    if (s.simulate.trials < 1) throw ConfigError("--trials must be >= 1");
    if (s.simulate.jobs < 1) throw ConfigError("--jobs must be >= 1");
    ScenarioConfig probe;
    probe.scenario = ClassLabel::http_flood;
    probe.duration_s = s.simulate.duration_s;
    probe.normal_rps = s.simulate.normal_rps;
    probe.run_id = "probe";
    validate(probe);
  }
  if (s.build_cmd->parsed()) {
    if (!s.build.modality.empty()) parse_modality(s.build.modality);
    parse_split_kind(s.build.split);
    validate(SplitSpec{SplitKind::random_stratified, s.build.test_size, s.build.seed});
    if (s.build.log_dim < 1) throw ConfigError("--log-dim must be >= 1");
  }
  for (const auto* o : {&s.train, &s.evaluate}) {
    const bool active = (o == &s.train ? s.train_cmd : s.eval_cmd)->parsed();
    if (!active) continue;
    cell_spec(*o);
    validate(experiment_config(*o));
  }
  if (s.ablate_cmd->parsed()) validate(experiment_config(s.ablate));
  (void)app;
}

std::vector<RunSpec> load_specs(const Options& o) {
  std::vector<fs::path> paths(o.run_spec_files.begin(), o.run_spec_files.end());
  return read_run_specs(paths);
}

int do_simulate(const Options& o, std::ostream& out) {
  const auto plan = make_trial_plan(o.trials, o.seed, {}, o.duration_s, o.normal_rps);
  const fs::path root(o.output_dir);
  fs::create_directories(root);
  std::vector<std::size_t> trace_counts(plan.size());
  std::vector<std::string> failures(plan.size());
  auto work = [&](std::size_t i) {
    try {
      const Trial t = simulate_trial(plan[i]);
      write_trial(root / plan[i].run_id, t);
      trace_counts[i] = t.traces.size();
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };
  const std::size_t workers = std::min(o.jobs, plan.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < plan.size(); ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < plan.size(); i = next++) work(i);
      });
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (!failures[i].empty()) throw Error(fmt::format("trial {}: {}", plan[i].run_id, failures[i]));

  std::vector<TrialEntry> entries;
  std::size_t total = 0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    entries.push_back({plan[i].run_id, plan[i].scenario, fs::path(plan[i].run_id)});
    total += trace_counts[i];
  }
  write_run_specs(entries, root / "run_specs.csv");
  fmt::print(out, "simulated {} trials, {} traces; run specs in {}\n", plan.size(), total,
             (root / "run_specs.csv").string());
  return kOk;
}

int do_build(const Options& o, std::ostream& out) {
  const Corpus corpus = load_corpus(load_specs(o));
  const SplitResult s =
      split(corpus.labels(), corpus.run_ids(), SplitSpec{parse_split_kind(o.split), o.test_size, o.seed});
  for (const auto& w : s.warnings) fmt::print(out, "warning: {}\n", w);
  std::vector<Modality> modes;
  if (o.modality.empty())
    modes.assign(kAllModalities.begin(), kAllModalities.end());
  else
    modes.push_back(parse_modality(o.modality));
  for (Modality m : modes) {
    const Dataset d = assemble_dataset(corpus, ModalityConfig{m, o.log_dim}, s.train);
    const fs::path dir = fs::path(o.output_dir) / std::string(to_string(m));
    write_dataset(dir, d, s.train);
    fmt::print(out, "{}: {} graphs, width {} -> {}\n", to_string(m), d.graphs.size(),
               d.modality.feature_width(), dir.string());
  }
  return kOk;
}

void print_cell(std::ostream& out, const CellResult& c) {
  if (!c.ok()) {
    fmt::print(out, "{}: failed: {}\n", c.cell.name(), *c.error);
    return;
  }
  fmt::print(out, "{}: accuracy {:.4f} macro_f1 {:.4f} weighted_f1 {:.4f} (train {}, test {})\n", c.cell.name(),
             c.metrics.accuracy, c.metrics.macro_f1, c.metrics.weighted_f1, c.train_size, c.test_size);
}

int do_train(const Options& o, std::ostream& out) {
  const Corpus corpus = load_corpus(load_specs(o));
  ExperimentRunner runner(corpus, experiment_config(o));
  const CellSpec spec = cell_spec(o);
  CellResult r = runner.run_cell(spec);
  if (!r.ok()) throw Error(*r.error);
  for (const auto& w : r.warnings) fmt::print(out, "warning: {}\n", w);
  write_cell(o.output_dir, r);
  print_cell(out, r);
  return kOk;
}

int do_evaluate(const Options& o, std::ostream& out) {
  const CellSpec spec = cell_spec(o);
  const fs::path ckpt = fs::path(o.output_dir) / "checkpoints" / (spec.name() + ".json");
  std::ifstream in(ckpt);
  if (!in) throw NotFoundError(fmt::format("no checkpoint at {}; run train first", ckpt.string()));
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", ckpt.string(), e.what()));
  }
  const Corpus corpus = load_corpus(load_specs(o));
  ExperimentRunner runner(corpus, experiment_config(o));
  CellResult r = runner.evaluate_checkpoint(spec, j);
  // Keep the training-side record from the earlier train run.
  const fs::path prior = fs::path(o.output_dir) / "cells" / (spec.name() + ".json");
  if (std::ifstream pin(prior); pin) {
    try {
      const CellResult old = cell_from_json(nlohmann::json::parse(pin));
      r.loss_curve = old.loss_curve;
    } catch (const std::exception&) {
    }
  }
  const fs::path prior_rt = fs::path(o.output_dir) / "cells" / (spec.name() + ".runtime.json");
  if (std::ifstream rin(prior_rt); rin) {
    try {
      r.train_seconds = nlohmann::json::parse(rin).value("train_seconds", 0.0);
    } catch (const std::exception&) {
    }
  }
  write_cell(o.output_dir, r);
  emit_report(read_cells(o.output_dir), o.output_dir);
  print_cell(out, r);
  return kOk;
}

int do_ablate(const Options& o, std::ostream& out) {
  const Corpus corpus = load_corpus(load_specs(o));
  const auto grid = default_grid();
  const auto cells = run_experiment_matrix(corpus, grid, experiment_config(o));
  std::set<std::string> warned;
  for (const auto& c : cells) {
    for (const auto& w : c.warnings)
      if (warned.insert(w).second) fmt::print(out, "warning: {}\n", w);
    write_cell(o.output_dir, c);
    print_cell(out, c);
  }
  emit_report(cells, o.output_dir);
  const auto failed = std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.ok(); });
  fmt::print(out, "{} cells, {} failed; report in {}\n", cells.size(), failed, o.output_dir);
  return failed == static_cast<std::ptrdiff_t>(cells.size()) ? kRuntimeFailure : kOk;
}

int do_report(const Options& o, std::ostream& out) {
  const auto cells = read_cells(o.output_dir);
  emit_report(cells, o.output_dir);
  fmt::print(out, "report for {} cells in {}\n", cells.size(), o.output_dir);
  return kOk;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Microservice request-graph attack detection toolkit", "svcgraph"};
  State s;
  build_app(app, s);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    fmt::print(err, "error: {}\n", one_line(e.what()));
    const CLI::App* sub = nullptr;
    for (const auto* c : app.get_subcommands()) sub = c;
    err << (sub ? sub->help() : app.help());
    return kUsageError;
  }

  try {
    validate_options(s, app);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", one_line(e.what()));
    const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kUsageError;
  }

  try {
    if (s.sim_cmd->parsed()) return do_simulate(s.simulate, out);
    if (s.build_cmd->parsed()) return do_build(s.build, out);
    if (s.train_cmd->parsed()) return do_train(s.train, out);
    if (s.eval_cmd->parsed()) return do_evaluate(s.evaluate, out);
    if (s.ablate_cmd->parsed()) return do_ablate(s.ablate, out);
    if (s.report_cmd->parsed()) return do_report(s.report, out);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", one_line(e.what()));
    return kRuntimeFailure;
  }
  return kUsageError;
}

std::vector<std::string> flag_names() {
  CLI::App app;
  State s;
  build_app(app, s);
  std::set<std::string> names;
  auto collect = [&](const CLI::App* a) {
    for (const CLI::Option* opt : a->get_options())
      for (const auto& n : opt->get_lnames()) names.insert("--" + n);
  };
  collect(&app);
  for (const CLI::App* sub : app.get_subcommands({})) collect(sub);
  return {names.begin(), names.end()};
}

std::string help_text() {
  CLI::App app{"Microservice request-graph attack detection toolkit", "svcgraph"};
  State s;
  build_app(app, s);
  std::string text = app.help();
  for (const CLI::App* sub : app.get_subcommands({})) text += "\n" + sub->help();
  return text;
}

}  // namespace svcgraph::cli
