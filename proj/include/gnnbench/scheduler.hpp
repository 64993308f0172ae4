#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gnnbench/evaluation.hpp"
#include "gnnbench/features.hpp"

namespace gnnbench {

// Declarative description of one experiment cell: dataset, feature regime,
// model, grid, protocol constants, and execution limits.
struct ExperimentConfig {
    std::string dataset_path;
    FeatureSpec features;
    ModelKind model = ModelKind::baseline_deepsets;
    HyperGrid grid;
    int k = 10;
    std::uint64_t seed = 42;
    int r_runs = 3;
    int patience = 50;
    StopCriterion stop_default = StopCriterion::validation_loss;
    int max_epochs = 200;
    double budget_seconds = 600.0;  // per-job wall clock
    int workers = 1;
    std::string output_dir;
    std::optional<std::string> splits_path;

    EarlyStopPolicy policy() const {
        EarlyStopPolicy p;
        p.patience = patience;
        p.criterion = stop_default;
        p.max_epochs = max_epochs;
        return p;
    }
};

inline ExperimentConfig experiment_from_json(const nlohmann::ordered_json& j) {
    ExperimentConfig c;
    try {
        c.dataset_path = j.at("dataset").get<std::string>();
        const auto& jf = j.at("features");
        c.features.mode = feature_mode_from_string(jf.at("mode").get<std::string>());
        c.features.max_degree = jf.value("max_degree", 0);
        c.features.normalize_degree = jf.value("normalize", false);
        c.model = model_kind_from_string(j.at("model").get<std::string>());
        c.grid = grid_from_json(j.at("grid"));
        c.k = j.at("k").get<int>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.r_runs = j.value("runs", 3);
        c.patience = j.value("patience", 50);
        c.stop_default = stop_criterion_from_string(j.value("stop_criterion", "loss"));
        c.max_epochs = j.value("max_epochs", 200);
        c.budget_seconds = j.value("budget_seconds", 600.0);
        c.workers = j.value("workers", 1);
        c.output_dir = j.value("output_dir", "");
        if (j.contains("splits")) c.splits_path = j.at("splits").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("experiment config: ") + e.what());
    }
    if (c.grid.size() < 1) throw ValidationError("experiment config: grid size must be >= 1");
    if (c.workers < 1) throw ValidationError("experiment config: worker count must be >= 1");
    if (c.budget_seconds <= 0) throw ValidationError("experiment config: budget must be positive");
    return c;
}

inline nlohmann::ordered_json experiment_to_json(const ExperimentConfig& c) {
    nlohmann::ordered_json j;
    j["dataset"] = c.dataset_path;
    j["features"] = {{"mode", to_string(c.features.mode)},
                     {"max_degree", c.features.max_degree},
                     {"normalize", c.features.normalize_degree}};
    j["model"] = to_string(c.model);
    j["grid"] = grid_to_json(c.grid);
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["runs"] = c.r_runs;
    j["patience"] = c.patience;
    j["stop_criterion"] = to_string(c.stop_default);
    j["max_epochs"] = c.max_epochs;
    j["budget_seconds"] = c.budget_seconds;
    j["workers"] = c.workers;
    j["output_dir"] = c.output_dir;
    if (c.splits_path) j["splits"] = *c.splits_path;
    return j;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return experiment_from_json(j);
}

// Canonical content hash input for one grid point. Folding it into the job
// id means a ledger can never satisfy a different grid by accident.
inline std::string config_fingerprint(const ModelConfig& c) { return config_to_json(c).dump(); }

// Stable identity of one training job. Pure function of its inputs (including
// the configuration content), so a rerun recognizes exactly its own work.
inline std::string job_id(const std::string& dataset, const std::string& model,
                          const std::string& feature_mode, std::uint64_t seed, int fold,
                          const std::string& purpose, int config_index, int run_index,
                          const std::string& config_fp) {
    std::ostringstream key;
    key << dataset << '|' << model << '|' << feature_mode << '|' << seed << '|' << fold << '|'
        << purpose << '|' << config_index << '|' << run_index << '|' << config_fp;
    std::ostringstream hex;
    hex << std::hex << fnv1a64(key.str());
    return hex.str();
}

struct LedgerEntry {
    std::string job_id;
    std::string dataset;
    std::string model;
    std::string feature_mode;
    int fold = 0;
    std::string purpose;  // selection | final
    int config_index = 0;
    int run_index = 0;
    RunRecord record;
};

inline nlohmann::json ledger_entry_to_json(const LedgerEntry& e) {
    nlohmann::json j;
    j["job_id"] = e.job_id;
    j["dataset"] = e.dataset;
    j["model"] = e.model;
    j["feature_mode"] = e.feature_mode;
    j["fold"] = e.fold;
    j["purpose"] = e.purpose;
    j["config_index"] = e.config_index;
    j["run_index"] = e.run_index;
    j["status"] = to_string(e.record.status);
    j["record"] = run_record_to_json(e.record);
    return j;
}

inline LedgerEntry ledger_entry_from_json(const nlohmann::json& j) {
    LedgerEntry e;
    try {
        e.job_id = j.at("job_id").get<std::string>();
        e.dataset = j.at("dataset").get<std::string>();
        e.model = j.at("model").get<std::string>();
        e.feature_mode = j.at("feature_mode").get<std::string>();
        e.fold = j.at("fold").get<int>();
        e.purpose = j.at("purpose").get<std::string>();
        e.config_index = j.at("config_index").get<int>();
        e.run_index = j.at("run_index").get<int>();
        e.record = run_record_from_json(j.at("record"));
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("ledger entry: ") + ex.what());
    }
    return e;
}

// Append-only newline-delimited JSON results file; the single serialization
// point between workers.
class JobLedger {
public:
    explicit JobLedger(std::filesystem::path path) : path_(std::move(path)) {
        if (std::filesystem::exists(path_)) {
            std::ifstream in(path_);
            std::string line;
            std::size_t lineno = 0;
            while (std::getline(in, line)) {
                ++lineno;
                if (line.empty()) continue;
                nlohmann::json j;
                try {
                    j = nlohmann::json::parse(line);
                } catch (const nlohmann::json::exception& e) {
                    throw ValidationError(path_.string() + ":" + std::to_string(lineno) + ": " +
                                          e.what());
                }
                const LedgerEntry entry = ledger_entry_from_json(j);
                entries_[entry.job_id] = entry;
            }
        }
    }

    bool has(const std::string& id) const { return entries_.count(id) > 0; }

    const LedgerEntry* find(const std::string& id) const {
        const auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void append(const LedgerEntry& entry) {
        std::lock_guard<std::mutex> lock(mtx_);
        std::ofstream out(path_, std::ios::app);
        if (!out) throw ValidationError("cannot append to ledger " + path_.string());
        out << ledger_entry_to_json(entry).dump() << '\n';
        out.flush();
        entries_[entry.job_id] = entry;
    }

    std::size_t size() const { return entries_.size(); }

    std::vector<LedgerEntry> all() const {
        std::vector<LedgerEntry> out;
        out.reserve(entries_.size());
        for (const auto& [id, e] : entries_) out.push_back(e);
        return out;
    }

private:
    std::filesystem::path path_;
    std::map<std::string, LedgerEntry> entries_;
    std::mutex mtx_;
};

struct RunJobsResult {
    std::optional<AssessmentReport> report;  // absent when stopped early
    AuditResult audit;
    int executed = 0;
    int skipped = 0;
    std::vector<LabeledRunRecord> records;
};

namespace sched_detail {

struct PendingJob {
    std::string id;
    TrainRequest request;
    int fold = 0;
    std::string purpose;
    int config_index = 0;
    int run_index = 0;
};

// Fixed-size pool over a job list. Workers share nothing mutable but the
// fetch counter and the ledger. Returns the number of jobs executed.
inline int run_pool(std::vector<PendingJob>& jobs, const TrainFn& trainer, JobLedger& ledger,
                    const ExperimentConfig& cfg, const std::string& dataset_name, int workers,
                    int remaining_allowance) {
    if (jobs.empty() || remaining_allowance == 0) return 0;
    std::atomic<int> next{0};
    const int allowed = remaining_allowance < 0
                            ? static_cast<int>(jobs.size())
                            : std::min<int>(remaining_allowance, static_cast<int>(jobs.size()));
    auto work = [&]() {
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= allowed) return;
            const PendingJob& job = jobs[i];
            RunRecord rec;
            bool ok = false;
            for (int attempt = 0; attempt < 2 && !ok; ++attempt) {
                try {
                    rec = trainer(job.request);
                    ok = true;
                } catch (const std::exception&) {
                    // one retry on crash, then failed terminally
                }
            }
            if (!ok) {
                rec = RunRecord{};
                rec.config = job.request.config;
                rec.seeds = job.request.seeds;
                rec.status = RunStatus::failed;
            }
            LedgerEntry entry;
            entry.job_id = job.id;
            entry.dataset = dataset_name;
            entry.model = to_string(cfg.model);
            entry.feature_mode = to_string(cfg.features.mode);
            entry.fold = job.fold;
            entry.purpose = job.purpose;
            entry.config_index = job.config_index;
            entry.run_index = job.run_index;
            entry.record = std::move(rec);
            ledger.append(entry);
        }
    };
    std::vector<std::thread> pool;
    const int n_threads = std::max(1, std::min(workers, allowed));
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    return allowed;
}

inline LabeledRunRecord to_labeled(const LedgerEntry& e) {
    LabeledRunRecord r;
    r.record_id = "fold" + std::to_string(e.fold) + "/" + e.purpose + "/" +
                  (e.purpose == "selection" ? "cfg" + std::to_string(e.config_index)
                                            : "run" + std::to_string(e.run_index));
    r.fold = e.fold;
    r.phase = e.purpose;
    r.config_index = e.config_index;
    r.run_index = e.run_index;
    r.rec = e.record;
    return r;
}

}  // namespace sched_detail

// Loads every ledger record, proving each one belongs to this experiment by
// recomputing its job id from the entry's coordinates and the current grid.
// A stale or foreign output directory fails loudly instead of polluting the
// aggregate.
inline std::vector<LabeledRunRecord> ledger_records_for(const JobLedger& ledger,
                                                        const ExperimentConfig& cfg,
                                                        const std::string& dataset_name,
                                                        const std::vector<ModelConfig>& grid_configs) {
    std::vector<LabeledRunRecord> out;
    for (const auto& e : ledger.all()) {
        const bool index_ok =
            e.config_index >= 0 && e.config_index < static_cast<int>(grid_configs.size());
        const std::string expected =
            index_ok ? job_id(dataset_name, to_string(cfg.model), to_string(cfg.features.mode),
                              cfg.seed, e.fold, e.purpose, e.config_index, e.run_index,
                              config_fingerprint(grid_configs[e.config_index]))
                     : "";
        if (!index_ok || expected != e.job_id)
            throw ValidationError("ledger entry " + e.job_id +
                                  " does not belong to this experiment (stale output directory?)");
        out.push_back(sched_detail::to_labeled(e));
    }
    return out;
}

// Executes the (fold x config) selection matrix and the per-fold final runs
// on a worker pool, with per-job wall-clock budgets enforced inside the runs.
// Jobs already terminal in the ledger are skipped, except failed ones, which
// get retried on resume. `max_new_jobs` bounds how many jobs this invocation
// may execute (-1 for unlimited); a bounded invocation that cannot finish
// returns no report.
inline RunJobsResult run_jobs(const ExperimentConfig& cfg, const std::string& dataset_name,
                              const SplitPlan& plan, const std::vector<ModelConfig>& grid_configs,
                              const TrainFn& trainer, const std::filesystem::path& ledger_path,
                              int max_new_jobs = -1) {
    validate_split_plan(plan);
    if (plan.dataset_name != dataset_name)
        throw ValidationError("run_jobs: split plan does not match dataset");
    if (plan.runs() < cfg.r_runs)
        throw ValidationError("run_jobs: plan has fewer final holdouts than R");

    JobLedger ledger(ledger_path);
    RunJobsResult result;
    const auto policy = cfg.policy();

    const auto should_run = [&](const std::string& id) {
        const LedgerEntry* prev = ledger.find(id);
        if (!prev) return true;
        if (prev->record.status == RunStatus::failed) return true;  // crash: retry on resume
        ++result.skipped;
        return false;
    };

    // Phase 1: all selection jobs.
    std::vector<sched_detail::PendingJob> selection_jobs;
    for (int fold = 0; fold < plan.k; ++fold) {
        for (std::size_t c = 0; c < grid_configs.size(); ++c) {
            const std::string id = job_id(dataset_name, to_string(cfg.model),
                                          to_string(cfg.features.mode), cfg.seed, fold,
                                          "selection", static_cast<int>(c), 0,
                                          config_fingerprint(grid_configs[c]));
            if (!should_run(id)) continue;
            sched_detail::PendingJob job;
            job.id = id;
            job.request = make_selection_request(plan, fold, static_cast<int>(c), grid_configs[c],
                                                 policy, cfg.seed, cfg.budget_seconds);
            job.fold = fold;
            job.purpose = "selection";
            job.config_index = static_cast<int>(c);
            selection_jobs.push_back(std::move(job));
        }
    }
    result.executed += sched_detail::run_pool(selection_jobs, trainer, ledger, cfg, dataset_name,
                                              cfg.workers,
                                              max_new_jobs < 0 ? -1 : max_new_jobs - result.executed);
    if (max_new_jobs >= 0 && result.executed >= max_new_jobs &&
        static_cast<int>(selection_jobs.size()) > max_new_jobs) {
        return result;  // interrupted mid-selection; resume picks up the rest
    }

    // Barrier: selection for every fold must be terminal before final jobs
    // exist, because the best configuration defines them.
    const auto snapshot = ledger_records_for(ledger, cfg, dataset_name, grid_configs);
    std::map<int, std::vector<const LabeledRunRecord*>> selection_by_fold;
    for (const auto& r : snapshot)
        if (r.phase == "selection") selection_by_fold[r.fold].push_back(&r);

    std::vector<sched_detail::PendingJob> final_jobs;
    for (int fold = 0; fold < plan.k; ++fold) {
        const auto outcome = select_from_records(selection_by_fold[fold], grid_configs.size());
        if (outcome.all_oor) continue;  // whole-grid OOR on this fold: no final runs
        const int best = *outcome.best_index;
        for (int run = 0; run < cfg.r_runs; ++run) {
            const std::string id = job_id(dataset_name, to_string(cfg.model),
                                          to_string(cfg.features.mode), cfg.seed, fold, "final",
                                          best, run, config_fingerprint(grid_configs[best]));
            if (!should_run(id)) continue;
            sched_detail::PendingJob job;
            job.id = id;
            job.request = make_final_request(plan, fold, best, grid_configs[best], run, policy,
                                             cfg.seed, cfg.budget_seconds);
            job.fold = fold;
            job.purpose = "final";
            job.config_index = best;
            job.run_index = run;
            final_jobs.push_back(std::move(job));
        }
    }
    const int final_executed = sched_detail::run_pool(
        final_jobs, trainer, ledger, cfg, dataset_name, cfg.workers,
        max_new_jobs < 0 ? -1 : max_new_jobs - result.executed);
    result.executed += final_executed;
    if (max_new_jobs >= 0 && final_executed < static_cast<int>(final_jobs.size())) {
        return result;  // interrupted mid-final; resume picks up the rest
    }

    result.records = ledger_records_for(ledger, cfg, dataset_name, grid_configs);
    result.audit = audit_access(result.records, plan);
    if (result.audit.pass)
        result.report = aggregate_assessment(dataset_name, to_string(cfg.model),
                                             to_string(cfg.features.mode), plan, grid_configs,
                                             result.records, cfg.r_runs, cfg.seed);
    return result;
}

}  // namespace gnnbench
