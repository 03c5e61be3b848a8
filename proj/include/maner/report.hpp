#pragma once

#include <string>
#include <vector>

#include "maner/experiment.hpp"
#include "maner/mlm.hpp"

namespace maner {

// Fixed 6-decimal formatting everywhere so CSV bytes are reproducible and
// the SVGs (which are generated from the CSVs) carry identical numbers.
std::string csv_number(double v);

void write_report_csv(const std::string& path, const std::vector<RunResult>& rows,
                      const std::string& config_digest);
std::vector<RunResult> read_report_csv(const std::string& path);

void write_sweep_csv(const std::string& path, const std::vector<SweepResult>& rows,
                     const std::string& config_digest);
std::vector<SweepResult> read_sweep_csv(const std::string& path);

// Per-strategy aggregate with deltas against baseline1, plus the reference
// results from the original XLM-RoBERTa/WikiANN study as footnote comments
// (context only, never pass/fail targets).
void write_table1_csv(const std::string& path, const std::vector<RunResult>& rows);
void write_table2_csv(const std::string& path, const std::vector<RunResult>& rows);
void write_table3_csv(const std::string& path, const std::vector<RunResult>& rows);

// Grouped per-language bar chart of F1 by strategy; reads report.csv.
void write_fig2_svg(const std::string& svg_path, const std::string& report_csv_path);
// F1-vs-train-size lines per strategy; reads fig3.csv.
void write_fig3_svg(const std::string& svg_path, const std::string& sweep_csv_path);

void write_curve_csv(const std::string& path, const MlmTrainStats& stats);

}  // namespace maner
