#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnnbench/grid.hpp"
#include "gnnbench/train.hpp"

namespace gnnbench {

// A run record plus the protocol coordinates the auditor and aggregator key
// on: which fold it belongs to and whether it was a selection or a final run.
struct LabeledRunRecord {
    std::string record_id;
    int fold = 0;
    std::string phase;  // "selection" | "final"
    int config_index = 0;
    int run_index = 0;
    RunRecord rec;
};

struct FoldOutcome {
    int fold = 0;
    bool oor = false;     // every grid configuration ran out of budget
    bool failed = false;  // selection or all final runs unusable for other reasons
    std::optional<int> selected_config_index;
    std::optional<ModelConfig> selected_config;
    double selected_valid_score = 0.0;
    std::vector<double> run_scores;  // test accuracy of each usable final run
    double fold_score = 0.0;         // mean of run_scores
};

// Per-fold selected configs and test scores, aggregated to mean and sample
// standard deviation over folds.
struct AssessmentReport {
    std::string dataset;
    std::string model;
    std::string feature_mode;
    int k = 0;
    int R = 0;
    std::uint64_t seed = 0;
    std::vector<FoldOutcome> folds;
    double mean = 0.0;
    double std_dev = 0.0;
    std::string std_convention = "sample (n-1)";
    double valid_mean = 0.0;  // mean selected-config validation accuracy
    std::optional<double> median_layers;
    bool oor = false;  // whole cell: every configuration OOR on every fold
};

// --- seed & request derivation -------------------------------------------
// Shared by the sequential driver and the parallel scheduler so results can
// never depend on execution order or worker count.

inline RunSeeds derive_run_seeds(std::uint64_t seed, int fold, int config_index, int run_index,
                                 bool final_phase) {
    const std::uint64_t base =
        seed_mix({seed, static_cast<std::uint64_t>(fold), static_cast<std::uint64_t>(config_index),
                  static_cast<std::uint64_t>(run_index), final_phase ? 1ULL : 0ULL});
    RunSeeds s;
    s.init = seed_mix({base, 1});
    s.shuffle = seed_mix({base, 2});
    s.dropout = seed_mix({base, 3});
    return s;
}

inline TrainRequest make_selection_request(const SplitPlan& plan, int fold, int config_index,
                                           const ModelConfig& config,
                                           const EarlyStopPolicy& policy, std::uint64_t seed,
                                           double budget_seconds) {
    TrainRequest req;
    req.config = config;
    req.train_idx = plan.inner.at(fold).train;
    req.valid_idx = plan.inner.at(fold).valid;
    req.policy = policy;
    req.seeds = derive_run_seeds(seed, fold, config_index, 0, false);
    req.budget_seconds = budget_seconds;
    req.set_prefix =
        "fold" + std::to_string(fold) + "/selection/cfg" + std::to_string(config_index);
    return req;
}

inline TrainRequest make_final_request(const SplitPlan& plan, int fold, int config_index,
                                       const ModelConfig& config, int run_index,
                                       const EarlyStopPolicy& policy, std::uint64_t seed,
                                       double budget_seconds) {
    TrainRequest req;
    req.config = config;
    req.train_idx = plan.final_train(fold, run_index);
    req.valid_idx = plan.final_holdouts.at(fold).at(run_index);
    req.test_idx = plan.folds.at(fold);
    req.policy = policy;
    req.seeds = derive_run_seeds(seed, fold, config_index, run_index, true);
    req.budget_seconds = budget_seconds;
    req.set_prefix = "fold" + std::to_string(fold) + "/final/run" + std::to_string(run_index);
    return req;
}

// --- model selection -------------------------------------------------------

struct SelectionOutcome {
    std::optional<int> best_index;
    double best_valid = 0.0;
    bool all_oor = false;  // set when every configuration was excluded by budget
};

// Argmax of inner-validation accuracy over the fold's selection records, in
// grid order; ties keep the earlier configuration. OOR and diverged runs are
// excluded. Throws when the grid is empty or nothing is usable for a reason
// other than budget.
inline SelectionOutcome select_from_records(const std::vector<const LabeledRunRecord*>& selection,
                                            std::size_t grid_size) {
    if (grid_size == 0) throw ValidationError("model selection: empty grid");
    SelectionOutcome out;
    bool any_non_oor_exclusion = false;
    std::vector<const LabeledRunRecord*> ordered(grid_size, nullptr);
    for (const auto* r : selection) {
        if (r->config_index < 0 || static_cast<std::size_t>(r->config_index) >= grid_size)
            throw ValidationError("model selection: config index outside grid");
        ordered[r->config_index] = r;
    }
    for (std::size_t i = 0; i < grid_size; ++i) {
        const auto* r = ordered[i];
        if (!r) throw ValidationError("model selection: missing record for config " +
                                      std::to_string(i));
        if (r->rec.status != RunStatus::done || !r->rec.final_valid_score) {
            if (r->rec.status != RunStatus::oor) any_non_oor_exclusion = true;
            continue;
        }
        const double score = *r->rec.final_valid_score;
        if (!out.best_index || score > out.best_valid) {
            out.best_index = static_cast<int>(i);
            out.best_valid = score;
        }
    }
    if (!out.best_index) {
        if (!any_non_oor_exclusion) {
            out.all_oor = true;
            return out;
        }
        throw ValidationError("model selection: every configuration diverged or failed");
    }
    return out;
}

// --- audit ------------------------------------------------------------------

struct AuditViolation {
    std::string record_id;
    std::string detail;
};

struct AuditResult {
    bool pass = true;
    std::vector<AuditViolation> violations;
};

// Replays every access log against the split plan. Fails if any test index of
// a record's fold was touched for training or validation, if test data was
// read at all during selection, or if a log is missing or malformed
// (fail-closed).
inline AuditResult audit_access(const std::vector<LabeledRunRecord>& records,
                                const SplitPlan& plan) {
    AuditResult out;
    const int n = plan.total();
    const auto flag = [&](const LabeledRunRecord& r, const std::string& detail) {
        out.pass = false;
        out.violations.push_back({r.record_id, detail});
    };
    for (const auto& r : records) {
        if (r.fold < 0 || r.fold >= plan.k) {
            flag(r, "record references fold outside the plan");
            continue;
        }
        if (r.phase != "selection" && r.phase != "final") {
            flag(r, "unknown phase '" + r.phase + "'");
            continue;
        }
        // crashed jobs never produced results; nothing to audit
        if (r.rec.status == RunStatus::failed && !r.rec.final_valid_score &&
            !r.rec.final_test_score && r.rec.epoch_metrics.empty())
            continue;
        if (r.rec.access_log.empty()) {
            flag(r, "missing access log");
            continue;
        }
        const std::set<int> test(plan.folds[r.fold].begin(), plan.folds[r.fold].end());
        int test_reads = 0;
        for (const auto& entry : r.rec.access_log) {
            for (int idx : entry.indices)
                if (idx < 0 || idx >= n) {
                    flag(r, "access entry '" + entry.set_id + "' references index " +
                                std::to_string(idx) + " outside the dataset");
                    break;
                }
            if (entry.purpose == "train" || entry.purpose == "validate") {
                for (int idx : entry.indices)
                    if (test.count(idx)) {
                        flag(r, "test index " + std::to_string(idx) + " of fold " +
                                    std::to_string(r.fold) + " used with purpose '" +
                                    entry.purpose + "' in set '" + entry.set_id + "'");
                        break;
                    }
            } else if (entry.purpose == "test") {
                ++test_reads;
                if (r.phase == "selection")
                    flag(r, "test data read during model selection (set '" + entry.set_id + "')");
                for (int idx : entry.indices)
                    if (!test.count(idx)) {
                        flag(r, "test-purpose access in set '" + entry.set_id +
                                    "' is not a subset of fold " + std::to_string(r.fold) +
                                    "'s test indices");
                        break;
                    }
            } else {
                flag(r, "unknown access purpose '" + entry.purpose + "'");
            }
        }
        if (test_reads > 1) flag(r, "test set read more than once");
        if (r.rec.final_test_score && test_reads == 0)
            flag(r, "final test score present but no test access was logged");
    }
    return out;
}

inline nlohmann::json audit_result_to_json(const AuditResult& a) {
    nlohmann::json j;
    j["pass"] = a.pass;
    nlohmann::json v = nlohmann::json::array();
    for (const auto& viol : a.violations)
        v.push_back({{"record", viol.record_id}, {"detail", viol.detail}});
    j["violations"] = std::move(v);
    return j;
}

// --- aggregation ------------------------------------------------------------

namespace eval_detail {

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace eval_detail

// Implements the fold-score arithmetic exactly: perf_k = sum(p_r)/R over the
// R final runs, overall = sum(perf_i)/k, reported with sample (n-1) standard
// deviation over folds.
inline AssessmentReport aggregate_assessment(const std::string& dataset,
                                             const std::string& model_name,
                                             const std::string& feature_mode,
                                             const SplitPlan& plan,
                                             const std::vector<ModelConfig>& grid_configs,
                                             const std::vector<LabeledRunRecord>& records,
                                             int r_runs, std::uint64_t seed) {
    AssessmentReport report;
    report.dataset = dataset;
    report.model = model_name;
    report.feature_mode = feature_mode;
    report.k = plan.k;
    report.R = r_runs;
    report.seed = seed;

    std::map<int, std::vector<const LabeledRunRecord*>> selection_by_fold;
    std::map<std::pair<int, int>, const LabeledRunRecord*> final_by_fold_run;
    for (const auto& r : records) {
        if (r.phase == "selection")
            selection_by_fold[r.fold].push_back(&r);
        else if (r.phase == "final")
            final_by_fold_run[{r.fold, r.run_index}] = &r;
    }

    std::vector<double> fold_scores;
    std::vector<double> valid_scores;
    std::vector<int> selected_layers;
    bool all_folds_oor = true;
    for (int fold = 0; fold < plan.k; ++fold) {
        FoldOutcome fo;
        fo.fold = fold;
        const auto it = selection_by_fold.find(fold);
        if (it == selection_by_fold.end())
            throw ValidationError("aggregate: no selection records for fold " +
                                  std::to_string(fold));
        const auto outcome = select_from_records(it->second, grid_configs.size());
        if (outcome.all_oor) {
            fo.oor = true;
            report.folds.push_back(std::move(fo));
            continue;
        }
        all_folds_oor = false;
        fo.selected_config_index = outcome.best_index;
        fo.selected_config = grid_configs.at(*outcome.best_index);
        fo.selected_valid_score = outcome.best_valid;
        for (int r = 0; r < r_runs; ++r) {
            const auto fit = final_by_fold_run.find({fold, r});
            if (fit == final_by_fold_run.end()) continue;
            const RunRecord& rec = fit->second->rec;
            if (rec.status == RunStatus::done && rec.final_test_score)
                fo.run_scores.push_back(*rec.final_test_score);
        }
        if (fo.run_scores.empty()) {
            fo.failed = true;
        } else {
            fo.fold_score = eval_detail::mean_of(fo.run_scores);
            fold_scores.push_back(fo.fold_score);
            valid_scores.push_back(fo.selected_valid_score);
            selected_layers.push_back(fo.selected_config->layers);
        }
        report.folds.push_back(std::move(fo));
    }

    report.oor = all_folds_oor;
    report.mean = eval_detail::mean_of(fold_scores);
    report.std_dev = eval_detail::sample_std(fold_scores, report.mean);
    report.valid_mean = eval_detail::mean_of(valid_scores);
    // depth is a message-passing notion; baselines have no layer axis
    const bool depth_applies = model_name == "gin" || model_name == "graphsage";
    if (depth_applies && !selected_layers.empty())
        report.median_layers = selected_depth(selected_layers);
    return report;
}

inline nlohmann::json report_to_json(const AssessmentReport& r) {
    nlohmann::json j;
    j["dataset"] = r.dataset;
    j["model"] = r.model;
    j["feature_mode"] = r.feature_mode;
    j["k"] = r.k;
    j["R"] = r.R;
    j["seed"] = r.seed;
    j["mean"] = r.mean;
    j["std_dev"] = r.std_dev;
    j["std_convention"] = r.std_convention;
    j["valid_mean"] = r.valid_mean;
    j["median_layers"] =
        r.median_layers ? nlohmann::json(*r.median_layers) : nlohmann::json(nullptr);
    j["oor"] = r.oor;
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json jf;
        jf["fold"] = f.fold;
        jf["oor"] = f.oor;
        jf["failed"] = f.failed;
        jf["selected_config_index"] = f.selected_config_index
                                          ? nlohmann::json(*f.selected_config_index)
                                          : nlohmann::json(nullptr);
        jf["selected_config"] =
            f.selected_config ? config_to_json(*f.selected_config) : nlohmann::json(nullptr);
        jf["selected_valid_score"] = f.selected_valid_score;
        jf["run_scores"] = f.run_scores;
        jf["fold_score"] = f.fold_score;
        folds.push_back(std::move(jf));
    }
    j["folds"] = std::move(folds);
    return j;
}

inline AssessmentReport report_from_json(const nlohmann::json& j) {
    AssessmentReport r;
    try {
        r.dataset = j.at("dataset").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.feature_mode = j.at("feature_mode").get<std::string>();
        r.k = j.at("k").get<int>();
        r.R = j.at("R").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.mean = j.at("mean").get<double>();
        r.std_dev = j.at("std_dev").get<double>();
        r.std_convention = j.at("std_convention").get<std::string>();
        r.valid_mean = j.at("valid_mean").get<double>();
        if (!j.at("median_layers").is_null()) r.median_layers = j.at("median_layers").get<double>();
        r.oor = j.at("oor").get<bool>();
        for (const auto& jf : j.at("folds")) {
            FoldOutcome f;
            f.fold = jf.at("fold").get<int>();
            f.oor = jf.at("oor").get<bool>();
            f.failed = jf.at("failed").get<bool>();
            if (!jf.at("selected_config_index").is_null())
                f.selected_config_index = jf.at("selected_config_index").get<int>();
            if (!jf.at("selected_config").is_null())
                f.selected_config = config_from_json(jf.at("selected_config"));
            f.selected_valid_score = jf.at("selected_valid_score").get<double>();
            f.run_scores = jf.at("run_scores").get<std::vector<double>>();
            f.fold_score = jf.at("fold_score").get<double>();
            r.folds.push_back(std::move(f));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("assessment report json: ") + e.what());
    }
    return r;
}

// --- sequential protocol driver ----------------------------------------------

struct AssessOptions {
    EarlyStopPolicy policy;
    int r_runs = 3;
    double budget_seconds = 600.0;
    std::uint64_t seed = 0;
    std::string model_name;
    std::string feature_mode;
};

// Algorithm-faithful single-threaded run of the whole protocol: per fold,
// select on the inner split only, retrain R times on the full training
// portion with the pre-materialized holdouts, evaluate each on the test fold.
// The audit runs before the report is returned and aborts on any violation.
inline AssessmentReport assess(const std::string& dataset_name, const SplitPlan& plan,
                               const std::vector<ModelConfig>& grid_configs,
                               const TrainFn& trainer, const AssessOptions& opt,
                               std::vector<LabeledRunRecord>* records_out = nullptr) {
    if (grid_configs.empty()) throw ValidationError("assess: empty grid");
    if (opt.r_runs < 1) throw ValidationError("assess: R must be >= 1");
    if (plan.dataset_name != dataset_name)
        throw ValidationError("assess: plan does not match dataset");

    std::vector<LabeledRunRecord> records;
    for (int fold = 0; fold < plan.k; ++fold) {
        std::vector<const LabeledRunRecord*> selection;
        for (std::size_t c = 0; c < grid_configs.size(); ++c) {
            const auto req = make_selection_request(plan, fold, static_cast<int>(c),
                                                    grid_configs[c], opt.policy, opt.seed,
                                                    opt.budget_seconds);
            LabeledRunRecord lr;
            lr.record_id = req.set_prefix;
            lr.fold = fold;
            lr.phase = "selection";
            lr.config_index = static_cast<int>(c);
            lr.rec = trainer(req);
            records.push_back(std::move(lr));
        }
        for (const auto& r : records)
            if (r.fold == fold && r.phase == "selection") selection.push_back(&r);
        const auto outcome = select_from_records(selection, grid_configs.size());
        if (outcome.all_oor) continue;
        const int best = *outcome.best_index;
        for (int run = 0; run < opt.r_runs; ++run) {
            const auto req = make_final_request(plan, fold, best, grid_configs[best], run,
                                                opt.policy, opt.seed, opt.budget_seconds);
            LabeledRunRecord lr;
            lr.record_id = req.set_prefix;
            lr.fold = fold;
            lr.phase = "final";
            lr.config_index = best;
            lr.run_index = run;
            lr.rec = trainer(req);
            records.push_back(std::move(lr));
        }
    }

    const auto audit = audit_access(records, plan);
    if (!audit.pass) {
        std::string msg = "leakage audit failed:";
        for (const auto& v : audit.violations) msg += "\n  [" + v.record_id + "] " + v.detail;
        throw AuditError(msg);
    }
    auto report = aggregate_assessment(dataset_name, opt.model_name, opt.feature_mode, plan,
                                       grid_configs, records, opt.r_runs, opt.seed);
    if (records_out) *records_out = std::move(records);
    return report;
}

}  // namespace gnnbench
