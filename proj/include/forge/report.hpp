#pragma once

#include <string>
#include <vector>

#include "forge/mask.hpp"
#include "forge/pipelines.hpp"

namespace forge {

// One summary.csv line per (variant, sparsity).
struct ReportRow {
    std::string experiment_id;
    std::string variant;  // dense | multi-task | single-task | task-agnostic
    double sparsity = 0.0;
    double param_one = 100.0;
    double param_all = 100.0;
    std::vector<double> scores;  // task-native metric, registry order
};

std::string format_csv_value(double v);  // '.' decimal, 6 digits, no grouping

void write_summary_csv(const std::string& path, const std::vector<std::string>& task_ids,
                       const std::vector<ReportRow>& rows);
std::string summary_csv_text(const std::vector<std::string>& task_ids, const std::vector<ReportRow>& rows);

void write_curves_csv(const std::string& path, const TrainingHistory& history);

std::vector<std::vector<double>> overlap_matrix(const MaskSet& masks);
void write_overlap_csv(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& matrix);

// Best-effort single-file vector graphics rendered from the CSV data.
void write_curves_svg(const std::string& path, const TrainingHistory& history);
void write_heatmap_svg(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& matrix);

// One JSON object per line appended to runs.log.
void append_run_manifest(const std::string& log_path, const std::vector<std::string>& argv,
                         uint64_t config_hash, uint64_t seed, const std::vector<std::string>& outputs);

}  // namespace forge
