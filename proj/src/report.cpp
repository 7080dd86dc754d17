// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

#include "svcgraph/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "svcgraph/errors.hpp"

namespace svcgraph {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string num(double v) { return fmt::format("{:.6f}", v); }

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string service_path(const std::vector<Service>& nodes) {
  std::vector<std::string> names;
  for (Service s : nodes) names.emplace_back(to_string(s));
  std::sort(names.begin(), names.end());
  return fmt::format("{}", fmt::join(names, "|"));
}

}  // namespace

ojson cell_to_json(const CellResult& c) {
  ojson j;
  j["cell"] = c.cell.name();
  j["model"] = to_string(c.cell.model);
  j["split"] = to_string(c.cell.split);
  j["modality"] = to_string(c.cell.modality);
  j["status"] = c.ok() ? "ok" : "failed";
  j["error"] = c.error ? ojson(*c.error) : ojson(nullptr);
  j["warnings"] = c.warnings;
  j["train_size"] = c.train_size;
  j["test_size"] = c.test_size;
  j["accuracy"] = c.metrics.accuracy;
  j["macro_f1"] = c.metrics.macro_f1;
  j["weighted_f1"] = c.metrics.weighted_f1;
  auto per_class = ojson::array();
  for (std::size_t k = 0; k < c.metrics.per_class.size(); ++k) {
    const auto& m = c.metrics.per_class[k];
    per_class.push_back({{"class", to_string(kAllClasses[k])},
                         {"precision", m.precision},
                         {"recall", m.recall},
                         {"f1", m.f1},
                         {"support", m.support}});
  }
  j["per_class"] = std::move(per_class);
  j["recall"] = c.metrics.recalls();
  j["confusion"] = c.metrics.confusion;
  j["loss_curve"] = c.loss_curve;
  auto logits = ojson::array();
  for (Eigen::Index i = 0; i < c.test_logits.rows(); ++i) {
    auto row = ojson::array();
    for (Eigen::Index k = 0; k < c.test_logits.cols(); ++k) row.push_back(c.test_logits(i, k));
    logits.push_back(std::move(row));
  }
  j["test_logits"] = std::move(logits);
  j["test_labels"] = c.test_labels;
  auto mis = ojson::array();
  for (const auto& m : c.misclassified) {
    ojson e;
    e["graph_id"] = m.graph_id;
    e["run_id"] = m.run_id;
    auto nodes = ojson::array();
    for (Service s : m.nodes) nodes.push_back(to_string(s));
    e["nodes"] = std::move(nodes);
    e["edge_count"] = m.edge_count;
    e["true"] = to_string(m.truth);
    e["predicted"] = to_string(m.predicted);
    mis.push_back(std::move(e));
  }
  j["misclassified"] = std::move(mis);
  return j;
}

CellResult cell_from_json(const nlohmann::json& j) {
  CellResult c;
  try {
    c.cell.model = parse_model_kind(j.at("model").get<std::string>());
    c.cell.split = parse_split_kind(j.at("split").get<std::string>());
    c.cell.modality = parse_modality(j.at("modality").get<std::string>());
    if (!j.at("error").is_null()) c.error = j.at("error").get<std::string>();
    c.warnings = j.at("warnings").get<std::vector<std::string>>();
    c.train_size = j.at("train_size").get<std::size_t>();
    c.test_size = j.at("test_size").get<std::size_t>();
    c.metrics.accuracy = j.at("accuracy").get<double>();
    c.metrics.macro_f1 = j.at("macro_f1").get<double>();
    c.metrics.weighted_f1 = j.at("weighted_f1").get<double>();
    for (const auto& m : j.at("per_class"))
      c.metrics.per_class.push_back({m.at("precision").get<double>(), m.at("recall").get<double>(),
                                     m.at("f1").get<double>(), m.at("support").get<std::size_t>()});
    c.metrics.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    c.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    const auto& logits = j.at("test_logits");
    if (!logits.empty()) {
      c.test_logits.resize(static_cast<Eigen::Index>(logits.size()), static_cast<Eigen::Index>(logits[0].size()));
      for (std::size_t i = 0; i < logits.size(); ++i)
        for (std::size_t k = 0; k < logits[i].size(); ++k)
          c.test_logits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = logits[i][k].get<double>();
    }
    c.test_labels = j.at("test_labels").get<std::vector<std::size_t>>();
    for (const auto& e : j.at("misclassified")) {
      MisclassifiedGraph m;
      m.graph_id = e.at("graph_id").get<std::string>();
      m.run_id = e.at("run_id").get<std::string>();
      for (const auto& s : e.at("nodes")) m.nodes.push_back(parse_service(s.get<std::string>()));
      m.edge_count = e.at("edge_count").get<std::size_t>();
      m.truth = parse_class_label(e.at("true").get<std::string>());
      m.predicted = parse_class_label(e.at("predicted").get<std::string>());
      c.misclassified.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(fmt::format("malformed cell result: {}", e.what()));
  }
  return c;
}

ojson cell_runtime_json(const CellResult& c) {
  ojson j;
  j["cell"] = c.cell.name();
  j["train_seconds"] = c.train_seconds;
  j["predict_ms_per_graph"] = c.predict_ms_per_graph;
  return j;
}

void write_cell(const fs::path& dir, const CellResult& c) {
  std::error_code ec;
  fs::create_directories(dir / "cells", ec);
  if (ec) throw Error(fmt::format("cannot create {}: {}", (dir / "cells").string(), ec.message()));
  write_text(dir / "cells" / (c.cell.name() + ".json"), cell_to_json(c).dump() + "\n");
  write_text(dir / "cells" / (c.cell.name() + ".runtime.json"), cell_runtime_json(c).dump(2) + "\n");
  if (!c.checkpoint.is_null()) {
    fs::create_directories(dir / "checkpoints", ec);
    if (ec) throw Error(fmt::format("cannot create checkpoints directory: {}", ec.message()));
    write_text(dir / "checkpoints" / (c.cell.name() + ".json"), c.checkpoint.dump() + "\n");
  }
}

std::vector<CellResult> read_cells(const fs::path& dir) {
  const fs::path cells_dir = dir / "cells";
  std::vector<CellResult> cells;
  if (fs::is_directory(cells_dir)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cells_dir)) {
      const std::string name = e.path().filename().string();
      if (e.path().extension() == ".json" && name.find(".runtime.") == std::string::npos) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      CellResult c = cell_from_json(read_json(f));
      fs::path rt = f;
      rt.replace_extension(".runtime.json");
      if (fs::exists(rt)) {
        const auto j = read_json(rt);
        c.train_seconds = j.value("train_seconds", 0.0);
        c.predict_ms_per_graph = j.value("predict_ms_per_graph", 0.0);
      }
      cells.push_back(std::move(c));
    }
  }
  if (cells.empty()) throw NotFoundError(fmt::format("no cell results under {}", cells_dir.string()));
  const auto grid = default_grid();
  auto rank = [&](const CellResult& c) {
    const auto it = std::find(grid.begin(), grid.end(), c.cell);
    return static_cast<std::size_t>(it - grid.begin());
  };
  std::stable_sort(cells.begin(), cells.end(), [&](const CellResult& a, const CellResult& b) {
    const auto ra = rank(a), rb = rank(b);
    return ra != rb ? ra < rb : a.cell.name() < b.cell.name();
  });
  return cells;
}

std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          std::span<const std::string> labels, std::span<const double> values) {
  const int bar_w = 60, gap = 30, left = 70, top = 40, plot_h = 240, bottom = 120;
  const int width = left + static_cast<int>(labels.size()) * (bar_w + gap) + gap;
  const int height = top + plot_h + bottom;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax <= 0.0) vmax = 1.0;

  std::ostringstream s;
  s << fmt::format(R"svg(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">)svg",
                   width, height)
    << "\n";
  s << fmt::format(R"svg(<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>)svg", width / 2,
                   svg_escape(title))
    << "\n";
  s << fmt::format(R"svg(<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/>)svg", left, top, top + plot_h)
    << "\n";
  s << fmt::format(R"svg(<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>)svg", left, top + plot_h, width - 10)
    << "\n";
  s << fmt::format(
           R"svg(<text x="16" y="{0}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>)svg",
           top + plot_h / 2, svg_escape(y_label))
    << "\n";
  for (int t = 0; t <= 4; ++t) {
    const double v = vmax * t / 4.0;
    const int y = top + plot_h - static_cast<int>(plot_h * t / 4);
    s << fmt::format(R"svg(<text x="{}" y="{}" font-size="10" text-anchor="end">{:.3g}</text>)svg", left - 6, y + 4, v)
      << "\n";
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int x = left + gap + static_cast<int>(i) * (bar_w + gap);
    const double v = std::max(0.0, values[i]);
    const int h = static_cast<int>(plot_h * v / vmax);
    s << fmt::format(R"svg(<rect x="{}" y="{}" width="{}" height="{}" fill="#4878a8"/>)svg", x, top + plot_h - h, bar_w, h)
      << "\n";
    s << fmt::format(R"svg(<text x="{}" y="{}" font-size="10" text-anchor="middle">{:.3f}</text>)svg", x + bar_w / 2,
                     top + plot_h - h - 4, values[i])
      << "\n";
    const int lx = x + bar_w / 2, ly = top + plot_h + 14;
    s << fmt::format(
             R"svg(<text x="{0}" y="{1}" font-size="10" text-anchor="end" transform="rotate(-35 {0} {1})">{2}</text>)svg",
             lx, ly, svg_escape(labels[i]))
      << "\n";
  }
  s << "</svg>\n";
  return s.str();
}

const CellResult* projection_cell(std::span<const CellResult> cells) {
  const CellSpec preferred{ModelKind::gcn, Modality::logs_plus_metrics, SplitKind::trial_level};
  for (const auto& c : cells)
    if (c.ok() && c.cell == preferred && c.test_logits.rows() > 0) return &c;
  for (const auto& c : cells)
    if (c.ok() && c.cell.model == ModelKind::gcn && c.test_logits.rows() > 0) return &c;
  return nullptr;
}

void emit_report(std::span<const CellResult> cells, const fs::path& dir, const TsneConfig& tsne) {
  if (cells.empty()) throw ContractViolation("emit_report needs at least one cell result");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(fmt::format("cannot create output directory {}", dir.string()));

  ojson results;
  results["cells"] = ojson::array();
  for (const auto& c : cells) {
    ojson j = cell_to_json(c);
    j.erase("test_logits");
    j.erase("test_labels");
    j.erase("misclassified");
    j["misclassified_count"] = c.misclassified.size();
    results["cells"].push_back(std::move(j));
  }
  results["timings"] = "runtime.csv";
  write_text(dir / "results.json", results.dump(2) + "\n");

  std::string table = "cell,class,precision,recall,f1,support\n";
  for (const auto& c : cells) {
    if (!c.ok()) continue;
    const auto name = c.cell.name();
    double mp = 0, mr = 0, wp = 0, wr = 0;
    std::size_t total = 0;
    for (std::size_t k = 0; k < c.metrics.per_class.size(); ++k) {
      const auto& m = c.metrics.per_class[k];
      table += fmt::format("{},{},{},{},{},{}\n", name, to_string(kAllClasses[k]), num(m.precision), num(m.recall),
                           num(m.f1), m.support);
      mp += m.precision;
      mr += m.recall;
      wp += m.precision * static_cast<double>(m.support);
      wr += m.recall * static_cast<double>(m.support);
      total += m.support;
    }
    const double k = static_cast<double>(c.metrics.per_class.size());
    const double t = total ? static_cast<double>(total) : 1.0;
    table += fmt::format("{},accuracy,,,{},{}\n", name, num(c.metrics.accuracy), total);
    table += fmt::format("{},macro avg,{},{},{},{}\n", name, num(mp / k), num(mr / k), num(c.metrics.macro_f1), total);
    table += fmt::format("{},weighted avg,{},{},{},{}\n", name, num(wp / t), num(wr / t), num(c.metrics.weighted_f1),
                         total);
  }
  write_text(dir / "metrics_table.csv", table);

  std::string ablation = "modality,accuracy,macro_f1,weighted_f1\n";
  std::vector<std::string> ab_labels;
  std::vector<double> ab_values;
  for (Modality m : kAllModalities) {
    for (const auto& c : cells) {
      if (!c.ok() || c.cell != CellSpec{ModelKind::gcn, m, SplitKind::trial_level}) continue;
      ablation += fmt::format("{},{},{},{}\n", to_string(m), num(c.metrics.accuracy), num(c.metrics.macro_f1),
                              num(c.metrics.weighted_f1));
      ab_labels.emplace_back(to_string(m));
      ab_values.push_back(c.metrics.macro_f1);
    }
  }
  write_text(dir / "ablation.csv", ablation);
  write_text(dir / "ablation.svg",
             bar_chart_svg("GCN modality ablation, trial-level split", "macro F1", ab_labels, ab_values));

  std::string runtime = "split,model,input,accuracy,macro_f1,train_s,pred_ms_per_graph\n";
  std::vector<std::string> rt_labels;
  std::vector<double> rt_train, rt_pred;
  for (const auto& c : cells) {
    if (!c.ok()) continue;
    runtime += fmt::format("{},{},{},{},{},{:.4f},{:.6f}\n", to_string(c.cell.split), to_string(c.cell.model),
                           to_string(c.cell.modality), num(c.metrics.accuracy), num(c.metrics.macro_f1),
                           c.train_seconds, c.predict_ms_per_graph);
    rt_labels.push_back(c.cell.name());
    rt_train.push_back(c.train_seconds);
    rt_pred.push_back(c.predict_ms_per_graph);
  }
  write_text(dir / "runtime.csv", runtime);
  write_text(dir / "runtime_train.svg", bar_chart_svg("Training time", "seconds", rt_labels, rt_train));
  write_text(dir / "runtime_predict.svg", bar_chart_svg("Prediction latency", "ms per graph", rt_labels, rt_pred));

  std::string tsne_csv = "x,y,label,test_index\n";
  if (const CellResult* pc = projection_cell(cells); pc != nullptr && pc->test_labels.size() >= 10) {
    TsneConfig cfg = tsne;
    const double n = static_cast<double>(std::min(pc->test_labels.size(), cfg.sample_cap));
    if (cfg.perplexity >= n / 3.0) cfg.perplexity = std::max(1.0, n / 3.0 - 1.0);
    for (const auto& p : project_logits_2d(pc->test_logits, pc->test_labels, cfg))
      tsne_csv += fmt::format("{:.6f},{:.6f},{},{}\n", p.x, p.y, to_string(kAllClasses[p.label]), p.source);
  }
  write_text(dir / "tsne.csv", tsne_csv);

  for (const auto& c : cells) {
    if (!c.ok()) continue;
    const auto name = c.cell.name();
    std::string conf = "true\\predicted";
    for (ClassLabel k : kAllClasses) conf += fmt::format(",{}", to_string(k));
    conf += "\n";
    for (std::size_t r = 0; r < c.metrics.confusion.size(); ++r)
      conf += fmt::format("{},{}\n", to_string(kAllClasses[r]), fmt::join(c.metrics.confusion[r], ","));
    write_text(dir / fmt::format("confusion_{}.csv", name), conf);

    std::string errs;
    for (const auto& m : c.misclassified) {
      ojson e;
      e["graph_id"] = m.graph_id;
      e["run_id"] = m.run_id;
      auto nodes = ojson::array();
      for (Service s : m.nodes) nodes.push_back(to_string(s));
      e["nodes"] = std::move(nodes);
      e["service_path"] = service_path(m.nodes);
      e["edge_count"] = m.edge_count;
      e["true"] = to_string(m.truth);
      e["predicted"] = to_string(m.predicted);
      errs += e.dump() + "\n";
    }
    write_text(dir / fmt::format("errors_{}.jsonl", name), errs);
  }
}

}  // namespace svcgraph
