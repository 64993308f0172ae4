// Command-line front end: prepare-data, make-splits, run, report, audit,
// depth-analysis, compare. Exit codes: 0 ok, 2 validation error, 3 audit
// failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "gnnbench/dataset_json.hpp"
#include "gnnbench/report.hpp"
#include "gnnbench/train.hpp"
#include "gnnbench/tu_parser.hpp"

namespace fs = std::filesystem;
using namespace gnnbench;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitAudit = 3;

fs::path default_output_root() {
    if (const char* env = std::getenv("GNNBENCH_OUT")) return fs::path(env);
    return fs::path("gnnbench-out");
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

void print_stats(const StatsRecord& s) {
    std::cout << s.name << ": " << s.graph_count << " graphs, " << s.class_count
              << " classes, mean nodes " << s.mean_nodes << ", mean edges " << s.mean_edges;
    if (s.has_node_labels) std::cout << ", " << s.distinct_node_labels << " node labels";
    if (s.attribute_width > 0) std::cout << ", " << s.attribute_width << " attributes";
    std::cout << '\n';
}

int cmd_prepare_data(const std::string& root, const std::string& name, const std::string& out) {
    TuParseNotes notes;
    const GraphDataset ds = parse_tu_dataset(root, name, &notes);
    if (!out.empty()) {
        save_dataset(ds, out);
        std::cout << "wrote " << out << '\n';
    }
    print_stats(dataset_stats(ds));
    if (notes.self_loops_dropped || notes.directed_pairs_merged)
        std::cout << "normalized: " << notes.directed_pairs_merged << " duplicate directed pairs, "
                  << notes.self_loops_dropped << " self-loops dropped\n";
    return kExitOk;
}

int cmd_make_splits(const std::string& data, int k, std::uint64_t seed, int runs,
                    const std::string& out) {
    const GraphDataset ds = load_dataset(data);
    const SplitPlan plan = make_split_plan(ds, k, seed, runs);
    save_split_plan(plan, out);
    std::cout << "wrote " << out << " (" << plan.k << " folds over " << plan.total()
              << " samples)\n";
    return kExitOk;
}

int cmd_run(const std::string& config_path, int workers_override, const std::string& out_override,
            int max_jobs) {
    ExperimentConfig cfg = load_experiment(config_path);
    if (workers_override > 0) cfg.workers = workers_override;

    fs::path outdir;
    if (!out_override.empty())
        outdir = out_override;
    else if (!cfg.output_dir.empty())
        outdir = cfg.output_dir;
    else
        outdir = default_output_root() / fs::path(config_path).stem();
    fs::create_directories(outdir);
    cfg.output_dir = outdir.string();

    const GraphDataset ds = load_dataset(cfg.dataset_path);
    SplitPlan plan;
    if (cfg.splits_path) {
        plan = load_split_plan(*cfg.splits_path);
        validate_plan_against(plan, ds);
        if (plan.runs() < cfg.r_runs)
            throw ValidationError("split plan provides fewer final holdouts than runs=" +
                                  std::to_string(cfg.r_runs));
    } else {
        plan = make_split_plan(ds, cfg.k, cfg.seed, cfg.r_runs);
    }
    save_split_plan(plan, outdir / "splits.json");
    write_text(outdir / "experiment.json", experiment_to_json(cfg).dump(2) + "\n");

    auto fd = std::make_shared<FeaturizedDataset>(build_features(ds, cfg.features));
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    std::cout << "grid: " << grid_configs.size() << " configurations, " << plan.k << " folds, R="
              << cfg.r_runs << ", workers=" << cfg.workers << '\n';

    const auto result = run_jobs(cfg, ds.name, plan, grid_configs, make_neural_trainer(fd),
                                 outdir / "ledger.ndjson", max_jobs);
    std::cout << "executed " << result.executed << " jobs, skipped " << result.skipped
              << " already done\n";
    if (!result.report) {
        if (!result.audit.pass) {
            write_text(outdir / "audit.json", audit_result_to_json(result.audit).dump(2) + "\n");
            std::cerr << "leakage audit FAILED; see " << (outdir / "audit.json") << '\n';
            return kExitAudit;
        }
        std::cout << "stopped before completion (max-jobs); rerun to resume\n";
        return kExitOk;
    }
    write_text(outdir / "audit.json", audit_result_to_json(result.audit).dump(2) + "\n");
    write_text(outdir / "assessment.json", report_to_json(*result.report).dump(2) + "\n");
    const auto& r = *result.report;
    std::cout << r.model << " on " << r.dataset << " [" << r.feature_mode << "]: "
              << (r.oor ? "OOR" : format_cell(r)) << '\n';
    return kExitOk;
}

std::vector<AssessmentReport> reports_under(const std::string& dir) {
    return load_reports_from_dir(dir);
}

int cmd_report(const std::string& dir, const std::string& csv, bool verify) {
    if (verify) {
        bool all_ok = true;
        for (const auto& entry : fs::recursive_directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().filename() != "assessment.json") continue;
            std::string diag;
            if (!verify_output_dir(entry.path().parent_path(), &diag)) {
                std::cerr << entry.path().parent_path() << ": " << diag << '\n';
                all_ok = false;
            }
        }
        if (!all_ok) return kExitValidation;
        std::cout << "verify: all reports re-derivable from their ledgers\n";
    }
    const auto reports = reports_under(dir);
    std::cout << render_results_table(reports);
    if (!csv.empty()) {
        write_text(csv, results_csv(reports));
        std::cout << "wrote " << csv << '\n';
    }
    return kExitOk;
}

int cmd_audit(const std::string& dir, const std::string& json_out) {
    const auto cfg = load_experiment(fs::path(dir) / "experiment.json");
    const auto plan = load_split_plan(fs::path(dir) / "splits.json");
    JobLedger ledger(fs::path(dir) / "ledger.ndjson");
    const auto records =
        ledger_records_for(ledger, cfg, plan.dataset_name, expand_grid(cfg.model, cfg.grid));
    if (records.empty()) throw ValidationError("audit: empty ledger in " + dir);
    const auto result = audit_access(records, plan);
    const auto j = audit_result_to_json(result);
    if (!json_out.empty()) write_text(json_out, j.dump(2) + "\n");
    std::cout << j.dump(2) << '\n';
    if (!result.pass) {
        std::cerr << "leakage audit FAILED with " << result.violations.size() << " violation(s)\n";
        return kExitAudit;
    }
    std::cout << "audit passed over " << records.size() << " run records\n";
    return kExitOk;
}

int cmd_depth(const std::string& dir, const std::string& csv) {
    const auto reports = reports_under(dir);
    const std::string text = depth_analysis_csv(reports);
    if (!csv.empty()) {
        write_text(csv, text);
        std::cout << "wrote " << csv << '\n';
    } else {
        std::cout << text;
    }
    return kExitOk;
}

int cmd_compare(const std::string& dir, const std::string& published, const std::string& out) {
    const auto reports = reports_under(dir);
    PublishedScores scores;
    const PublishedScores* scores_ptr = nullptr;
    if (!published.empty()) {
        scores = load_published_csv(published);
        scores_ptr = &scores;
    }
    const std::string text = compare_csv(reports, scores_ptr);
    if (!out.empty()) {
        write_text(out, text);
        std::cout << "wrote " << out << '\n';
    } else {
        std::cout << text;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fair graph-classification benchmarking: stratified nested CV, grid search, "
                 "structure-agnostic baselines, and leakage-audited reporting"};
    app.require_subcommand(1);

    std::string tu_root, tu_name, prep_out;
    auto* prep = app.add_subcommand("prepare-data", "Parse a TU-format dataset to canonical JSON");
    prep->add_option("--root", tu_root, "Directory containing the NAME/ dataset folder")->required();
    prep->add_option("--name", tu_name, "Dataset name (file prefix)")->required();
    prep->add_option("--out", prep_out, "Canonical JSON output path");

    std::string split_data, split_out;
    int split_k = 10, split_runs = 3;
    std::uint64_t split_seed = 42;
    auto* mksplit = app.add_subcommand("make-splits", "Write a deterministic stratified split plan");
    mksplit->add_option("--data", split_data, "Canonical dataset JSON")->required();
    mksplit->add_option("--k", split_k, "Outer fold count");
    mksplit->add_option("--seed", split_seed, "Split seed");
    mksplit->add_option("--runs", split_runs, "Final training runs per fold (R)");
    mksplit->add_option("--out", split_out, "Split plan output path")->required();

    std::string run_config, run_out;
    int run_workers = 0, run_max_jobs = -1;
    auto* run = app.add_subcommand("run", "Execute an experiment config end to end");
    run->add_option("--config", run_config, "Experiment config JSON")->required();
    run->add_option("--workers", run_workers, "Override worker count");
    run->add_option("--output-dir", run_out, "Override output directory");
    run->add_option("--max-jobs", run_max_jobs, "Execute at most this many new jobs, then stop");

    std::string rep_dir, rep_csv;
    bool rep_verify = false;
    auto* rep = app.add_subcommand("report", "Render the results table from assessment reports");
    rep->add_option("--dir", rep_dir, "Directory tree holding run outputs")->required();
    rep->add_option("--csv", rep_csv, "Also write a full-precision CSV");
    rep->add_flag("--verify", rep_verify, "Recompute every report from its ledger and diff");

    std::string audit_dir, audit_json;
    auto* aud = app.add_subcommand("audit", "Replay a run's access logs against its split plan");
    aud->add_option("--dir", audit_dir, "Run output directory")->required();
    aud->add_option("--json", audit_json, "Write the verdict JSON here");

    std::string depth_dir, depth_csv;
    auto* dep = app.add_subcommand("depth-analysis", "Median selected layers per model/dataset");
    dep->add_option("--dir", depth_dir, "Directory tree holding run outputs")->required();
    dep->add_option("--csv", depth_csv, "CSV output path (stdout if omitted)");

    std::string cmp_dir, cmp_published, cmp_out;
    auto* cmp = app.add_subcommand("compare",
                                   "Emit published/validation/test triples per model as CSV");
    cmp->add_option("--dir", cmp_dir, "Directory tree holding run outputs")->required();
    cmp->add_option("--published", cmp_published, "CSV of published numbers (model,dataset,acc)");
    cmp->add_option("--out", cmp_out, "CSV output path (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (prep->parsed()) return cmd_prepare_data(tu_root, tu_name, prep_out);
        if (mksplit->parsed()) return cmd_make_splits(split_data, split_k, split_seed, split_runs,
                                                      split_out);
        if (run->parsed()) return cmd_run(run_config, run_workers, run_out, run_max_jobs);
        if (rep->parsed()) return cmd_report(rep_dir, rep_csv, rep_verify);
        if (aud->parsed()) return cmd_audit(audit_dir, audit_json);
        if (dep->parsed()) return cmd_depth(depth_dir, depth_csv);
        if (cmp->parsed()) return cmd_compare(cmp_dir, cmp_published, cmp_out);
    } catch (const AuditError& e) {
        std::cerr << "audit error: " << e.what() << '\n';
        return kExitAudit;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}
