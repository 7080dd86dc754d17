// Copyright 2026 The svcgraph Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment output files. Everything except the files whose names contain
// "runtime" is a pure function of the cell results and reproduces byte for
// byte.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "svcgraph/experiment.hpp"
#include "svcgraph/tsne.hpp"

namespace svcgraph {

// Cell results minus wall-clock timings.
nlohmann::ordered_json cell_to_json(const CellResult& cell);
CellResult cell_from_json(const nlohmann::json& j);
nlohmann::ordered_json cell_runtime_json(const CellResult& cell);

// Writes cells/<name>.json, cells/<name>.runtime.json and, when present,
// checkpoints/<name>.json under `dir`.
void write_cell(const std::filesystem::path& dir, const CellResult& cell);
// Reads every cells/*.json under `dir` (with timings when available), ordered
// as in default_grid() and then by name. Throws NotFoundError if none exist.
std::vector<CellResult> read_cells(const std::filesystem::path& dir);

// Minimal standalone SVG bar chart.
std::string bar_chart_svg(const std::string& title, const std::string& y_label,
                          std::span<const std::string> labels, std::span<const double> values);

// Cell preferred for the logit projection: the trial-level logs+metrics GCN,
// else the first GCN cell with logits. Returns nullptr when there is none.
const CellResult* projection_cell(std::span<const CellResult> cells);

// Writes results.json, metrics_table.csv, ablation.csv, ablation.svg,
// runtime.csv, runtime_train.svg, runtime_predict.svg, tsne.csv,
// confusion_<cell>.csv and errors_<cell>.jsonl. Throws Error if the directory
// cannot be written or `cells` is empty.
void emit_report(std::span<const CellResult> cells, const std::filesystem::path& dir,
                 const TsneConfig& tsne = {});

}  // namespace svcgraph
