#include "forge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "forge/errors.hpp"

namespace forge {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);  // binary: LF line endings everywhere
    if (!os) throw IoError("cannot open for writing: " + path);
    return os;
}

std::string git_describe() {
#if defined(_WIN32)
    return "unknown";
#else
    FILE* p = popen("git describe --always --dirty 2>/dev/null", "r");
    if (!p) return "unknown";
    char buf[128] = {0};
    std::string out;
    while (fgets(buf, sizeof buf, p)) out += buf;
    pclose(p);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
#endif
}

}  // namespace

std::string format_csv_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string summary_csv_text(const std::vector<std::string>& task_ids, const std::vector<ReportRow>& rows) {
    std::ostringstream os;
    os << "experiment_id,variant,sparsity,param_pct_one,param_pct_all";
    for (const auto& id : task_ids) os << ",score_" << id;
    os << "\n";
    for (const auto& row : rows) {
        os << row.experiment_id << ',' << row.variant << ',' << format_csv_value(row.sparsity) << ','
           << format_csv_value(row.param_one) << ',' << format_csv_value(row.param_all);
        for (double s : row.scores) os << ',' << format_csv_value(s);
        os << "\n";
    }
    return os.str();
}

void write_summary_csv(const std::string& path, const std::vector<std::string>& task_ids,
                       const std::vector<ReportRow>& rows) {
    open_out(path) << summary_csv_text(task_ids, rows);
}

void write_curves_csv(const std::string& path, const TrainingHistory& history) {
    auto os = open_out(path);
    os << "step,trained_task,loss";
    for (const auto& id : history.task_ids) os << ",score_" << id;
    os << "\n";
    for (const auto& rec : history.records) {
        os << rec.step << ',' << rec.trained_task << ',' << format_csv_value(rec.loss);
        for (double m : rec.metrics) os << ',' << format_csv_value(m);
        os << "\n";
    }
}

std::vector<std::vector<double>> overlap_matrix(const MaskSet& masks) {
    const std::size_t n = masks.masks.size();
    std::vector<std::vector<double>> mat(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mat[i][j] = overlap(masks.masks[i], masks.masks[j]);
    return mat;
}

void write_overlap_csv(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& matrix) {
    auto os = open_out(path);
    os << "task";
    for (const auto& n : names) os << ',' << n;
    os << "\n";
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        os << names[i];
        for (double v : matrix[i]) os << ',' << format_csv_value(v);
        os << "\n";
    }
}

void write_curves_svg(const std::string& path, const TrainingHistory& history) {
    if (history.records.empty()) return;
    const double W = 640, H = 400, ml = 50, mr = 10, mt = 10, mb = 30;
    long max_step = 1;
    for (const auto& r : history.records) max_step = std::max(max_step, r.step);
    static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2"};
    auto os = open_out(path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
       << "' stroke='black'/>\n";
    os << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb << "' stroke='black'/>\n";
    for (std::size_t t = 0; t < history.task_ids.size(); ++t) {
        os << "<polyline fill='none' stroke='" << colors[t % 7] << "' stroke-width='1.5' points='";
        for (const auto& r : history.records) {
            const double x = ml + (W - ml - mr) * double(r.step) / double(max_step);
            const double y = (H - mb) - (H - mt - mb) * std::clamp(r.metrics[t], 0.0, 1.0);
            os << x << ',' << y << ' ';
        }
        os << "'/>\n";
        os << "<text x='" << W - mr - 100 << "' y='" << mt + 15 * double(t + 1) << "' fill='" << colors[t % 7]
           << "' font-size='12'>" << history.task_ids[t] << "</text>\n";
    }
    os << "<text x='" << W / 2 << "' y='" << H - 8 << "' font-size='12' text-anchor='middle'>step</text>\n";
    os << "</svg>\n";
}

void write_heatmap_svg(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<std::vector<double>>& matrix) {
    const std::size_t n = names.size();
    if (n == 0) return;
    const double cell = 56, ml = 80, mt = 60;
    const double W = ml + cell * double(n) + 10, H = mt + cell * double(n) + 10;
    auto os = open_out(path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    for (std::size_t i = 0; i < n; ++i) {
        os << "<text x='" << ml - 6 << "' y='" << mt + cell * double(i) + cell / 2 + 4
           << "' font-size='11' text-anchor='end'>" << names[i] << "</text>\n";
        os << "<text x='" << ml + cell * double(i) + cell / 2 << "' y='" << mt - 8
           << "' font-size='11' text-anchor='middle'>" << names[i] << "</text>\n";
        for (std::size_t j = 0; j < n; ++j) {
            const double v = std::clamp(matrix[i][j], 0.0, 1.0);
            const int r = int(255 * (1.0 - v) + 30 * v);
            const int g = int(255 * (1.0 - v) + 90 * v);
            const int b = int(255 * (1.0 - v) + 160 * v);
            os << "<rect x='" << ml + cell * double(j) << "' y='" << mt + cell * double(i) << "' width='" << cell
               << "' height='" << cell << "' fill='rgb(" << r << ',' << g << ',' << b << ")' stroke='white'/>\n";
            os << "<text x='" << ml + cell * double(j) + cell / 2 << "' y='" << mt + cell * double(i) + cell / 2 + 4
               << "' font-size='11' text-anchor='middle' fill='" << (v > 0.6 ? "white" : "black") << "'>"
               << format_csv_value(v).substr(0, 4) << "</text>\n";
        }
    }
    os << "</svg>\n";
}

void append_run_manifest(const std::string& log_path, const std::vector<std::string>& argv,
                         uint64_t config_hash, uint64_t seed, const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["argv"] = argv;
    char hash_hex[32];
    std::snprintf(hash_hex, sizeof hash_hex, "%016llx", static_cast<unsigned long long>(config_hash));
    j["config_hash"] = hash_hex;
    j["seed"] = seed;
    j["git"] = git_describe();
    j["outputs"] = outputs;
    std::ofstream os(log_path, std::ios::binary | std::ios::app);
    if (!os) throw IoError("cannot append to " + log_path);
    os << j.dump() << "\n";
}

}  // namespace forge
