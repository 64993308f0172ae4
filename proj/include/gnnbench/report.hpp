#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gnnbench/dataset_json.hpp"
#include "gnnbench/scheduler.hpp"

namespace gnnbench {

inline std::string display_model_name(const std::string& kind) {
    if (kind == "baseline_fingerprint") return "Baseline-Fingerprint";
    if (kind == "baseline_deepsets") return "Baseline-DeepSets";
    if (kind == "gin") return "GIN";
    if (kind == "graphsage") return "GraphSAGE";
    return kind;
}

// {no_features, with_degree} for the social regimes; chemical feature modes
// get an empty tag and their own column.
inline std::string regime_tag(const std::string& feature_mode) {
    if (feature_mode == "uninformative") return "no_features";
    if (feature_mode == "degree" || feature_mode == "degree_one_hot") return "with_degree";
    return "";
}

inline std::string format_percent(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v * 100.0);
    return buf;
}

// "mean +/- std" as percents with one decimal, or the OOR marker.
inline std::string format_cell(const AssessmentReport& r) {
    if (r.oor) return "OOR";
    return format_percent(r.mean) + " \xC2\xB1 " + format_percent(r.std_dev);
}

// Rows are models, columns are (dataset, regime) pairs; every cell is backed
// by one assessment report.
inline std::string render_results_table(const std::vector<AssessmentReport>& reports) {
    std::vector<std::string> models;
    std::vector<std::pair<std::string, std::string>> columns;  // dataset, regime
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::string>> cells;
    for (const auto& r : reports) {
        const std::string model = display_model_name(r.model);
        const std::string tag = regime_tag(r.feature_mode);
        const auto col = std::make_pair(r.dataset, tag);
        if (std::find(models.begin(), models.end(), model) == models.end())
            models.push_back(model);
        if (std::find(columns.begin(), columns.end(), col) == columns.end())
            columns.push_back(col);
        cells[col][model] = format_cell(r);
    }

    std::vector<std::string> headers;
    for (const auto& [ds, tag] : columns) headers.push_back(tag.empty() ? ds : ds + " (" + tag + ")");

    std::size_t name_w = 5;
    for (const auto& m : models) name_w = std::max(name_w, m.size());
    std::vector<std::size_t> col_w(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        col_w[c] = headers[c].size();
        for (const auto& m : models) {
            const auto it = cells[columns[c]].find(m);
            if (it != cells[columns[c]].end()) {
                // the +/- sign is two bytes of UTF-8 but one display column
                const std::size_t display = it->second.size() - (it->second == "OOR" ? 0 : 1);
                col_w[c] = std::max(col_w[c], display);
            }
        }
    }

    std::ostringstream out;
    out << std::string(name_w, ' ');
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out << "  " << headers[c] << std::string(col_w[c] - headers[c].size(), ' ');
    }
    out << '\n';
    for (const auto& m : models) {
        out << m << std::string(name_w - m.size(), ' ');
        for (std::size_t c = 0; c < columns.size(); ++c) {
            const auto it = cells[columns[c]].find(m);
            const std::string cell = it == cells[columns[c]].end() ? "-" : it->second;
            const std::size_t display = cell.size() - (cell.find("\xC2\xB1") == std::string::npos ? 0 : 1);
            out << "  " << cell << std::string(col_w[c] - display, ' ');
        }
        out << '\n';
    }
    return out.str();
}

// Full-precision machine-readable companion to the text table.
inline std::string results_csv(const std::vector<AssessmentReport>& reports) {
    std::ostringstream out;
    out << "model,dataset,feature_mode,regime,mean,std_dev,valid_mean,median_layers,oor,k,R\n";
    for (const auto& r : reports) {
        out << r.model << ',' << r.dataset << ',' << r.feature_mode << ',' << regime_tag(r.feature_mode)
            << ',';
        if (r.oor)
            out << ",,";
        else
            out << nlohmann::json(r.mean).dump() << ',' << nlohmann::json(r.std_dev).dump() << ','
                << nlohmann::json(r.valid_mean).dump();
        out << ',';
        if (r.median_layers) out << nlohmann::json(*r.median_layers).dump();
        out << ',' << (r.oor ? "OOR" : "") << ',' << r.k << ',' << r.R << '\n';
    }
    return out.str();
}

// Median selected depth per (model, dataset, feature regime).
inline std::string depth_analysis_csv(const std::vector<AssessmentReport>& reports) {
    std::ostringstream out;
    out << "model,dataset,feature_mode,median_layers\n";
    for (const auto& r : reports) {
        out << r.model << ',' << r.dataset << ',' << r.feature_mode << ',';
        if (r.median_layers) out << nlohmann::json(*r.median_layers).dump();
        out << '\n';
    }
    return out.str();
}

// Published numbers come from a user-supplied CSV (model,dataset,accuracy);
// nothing is hardcoded.
struct PublishedScores {
    std::map<std::pair<std::string, std::string>, double> by_model_dataset;
};

inline PublishedScores load_published_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    PublishedScores out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("model,", 0) == 0) continue;  // header
        std::istringstream ss(line);
        std::string model, dataset, value;
        if (!std::getline(ss, model, ',') || !std::getline(ss, dataset, ',') ||
            !std::getline(ss, value))
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'model,dataset,accuracy'");
        try {
            out.by_model_dataset[{model, dataset}] = std::stod(value);
        } catch (const std::exception&) {
            throw ValidationError(path.string() + ":" + std::to_string(lineno) +
                                  ": malformed accuracy '" + value + "'");
        }
    }
    return out;
}

// Per-model triples {published, validation mean, test mean} plus the
// validation-minus-test gap, ready for plotting.
inline std::string compare_csv(const std::vector<AssessmentReport>& reports,
                               const PublishedScores* published) {
    std::ostringstream out;
    out << "model,dataset,feature_mode,published,valid_mean,test_mean,gap\n";
    for (const auto& r : reports) {
        out << r.model << ',' << r.dataset << ',' << r.feature_mode << ',';
        if (published) {
            const auto it = published->by_model_dataset.find({r.model, r.dataset});
            if (it != published->by_model_dataset.end()) out << nlohmann::json(it->second).dump();
        }
        out << ',' << nlohmann::json(r.valid_mean).dump() << ',' << nlohmann::json(r.mean).dump()
            << ',' << nlohmann::json(r.valid_mean - r.mean).dump() << '\n';
    }
    return out.str();
}

// Recomputes the assessment from ledger + splits + experiment config alone
// and diffs it against the stored report. Every published number must be
// re-derivable this way.
inline bool verify_output_dir(const std::filesystem::path& dir, std::string* diagnostic = nullptr) {
    const auto cfg = load_experiment(dir / "experiment.json");
    const auto plan = load_split_plan(dir / "splits.json");
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);

    JobLedger ledger(dir / "ledger.ndjson");
    const auto records = ledger_records_for(ledger, cfg, plan.dataset_name, grid_configs);
    const auto audit = audit_access(records, plan);
    if (!audit.pass) {
        if (diagnostic) *diagnostic = "audit failed during verification";
        return false;
    }
    const auto recomputed = aggregate_assessment(plan.dataset_name, to_string(cfg.model),
                                                 to_string(cfg.features.mode), plan, grid_configs,
                                                 records, cfg.r_runs, cfg.seed);
    std::ifstream in(dir / "assessment.json");
    if (!in) {
        if (diagnostic) *diagnostic = "missing assessment.json";
        return false;
    }
    nlohmann::json stored;
    in >> stored;
    const nlohmann::json fresh = report_to_json(recomputed);
    if (stored != fresh) {
        if (diagnostic) *diagnostic = "stored report differs from the ledger-derived one";
        return false;
    }
    return true;
}

inline std::vector<AssessmentReport> load_reports_from_dir(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root))
        throw ValidationError("not a directory: " + root.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (entry.is_regular_file() && entry.path().filename() == "assessment.json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<AssessmentReport> reports;
    for (const auto& f : files) {
        std::ifstream in(f);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(f.string() + ": " + e.what());
        }
        reports.push_back(report_from_json(j));
    }
    if (reports.empty()) throw ValidationError("no assessment.json files under " + root.string());
    return reports;
}

}  // namespace gnnbench
