#include <catch2/catch.hpp>

#include <atomic>
#include <chrono>
#include <thread>

#include "gnnbench/scheduler.hpp"
#include "gnnbench/synthetic.hpp"
#include "gnnbench/train.hpp"
#include "support/stub_trainers.hpp"
#include "support/temp_dir.hpp"

using namespace gnnbench;
using testsupport::make_stub_trainer;
using testsupport::TempDir;

namespace {

GraphDataset tiny_dataset(int n) {
    GraphDataset ds;
    ds.name = "tiny";
    Rng rng(40);
    for (int i = 0; i < n; ++i) {
        Graph g = synth_detail::random_tree(5, rng);
        g.label = i % 2;
        ds.graphs.push_back(std::move(g));
    }
    ds.num_classes = 2;
    recount_classes(ds);
    return ds;
}

ExperimentConfig stub_experiment(int k, int configs, int r_runs) {
    nlohmann::ordered_json grid;
    std::vector<int> hidden;
    for (int i = 0; i < configs; ++i) hidden.push_back(8 + i);
    grid["hidden_units"] = hidden;

    ExperimentConfig cfg;
    cfg.dataset_path = "unused";
    cfg.features.mode = FeatureMode::uninformative;
    cfg.model = ModelKind::baseline_deepsets;
    cfg.grid = grid_from_json(grid);
    cfg.k = k;
    cfg.seed = 31;
    cfg.r_runs = r_runs;
    cfg.workers = 2;
    cfg.budget_seconds = 60;
    return cfg;
}

}  // namespace

TEST_CASE("expand_grid reproduces the 108-configuration chemical baseline grid") {
    nlohmann::ordered_json axes;
    axes["learning_rate"] = {1e-1, 1e-3, 1e-6};
    axes["hidden_units"] = {32, 128, 256};
    axes["batch_size"] = {32, 128};
    axes["l2"] = {1e-2, 1e-3, 1e-4};
    axes["stop_criterion"] = {"loss", "acc"};
    const auto grid = grid_from_json(axes);
    CHECK(grid.size() == 108);
    const auto configs = expand_grid(ModelKind::baseline_fingerprint, grid);
    REQUIRE(configs.size() == 108);
    // first axis slowest: the first 36 share learning_rate 1e-1
    CHECK(configs[0].learning_rate == Approx(1e-1));
    CHECK(configs[35].learning_rate == Approx(1e-1));
    CHECK(configs[36].learning_rate == Approx(1e-3));
    // last axis fastest: stop criterion alternates
    CHECK(*configs[0].stop_criterion == StopCriterion::validation_loss);
    CHECK(*configs[1].stop_criterion == StopCriterion::validation_accuracy);
}

TEST_CASE("expand_grid basics") {
    nlohmann::ordered_json one;
    one["layers"] = {3};
    CHECK(expand_grid(ModelKind::gin, grid_from_json(one)).size() == 1);

    nlohmann::ordered_json two;
    two["layers"] = {1, 2};
    two["hidden_units"] = {16, 32, 64};
    const auto configs = expand_grid(ModelKind::gin, grid_from_json(two));
    REQUIRE(configs.size() == 6);
    CHECK(configs[0].layers == 1);
    CHECK(configs[0].hidden_units == 16);
    CHECK(configs[1].hidden_units == 32);
    CHECK(configs[3].layers == 2);

    nlohmann::ordered_json empty_axis;
    empty_axis["layers"] = nlohmann::ordered_json::array();
    CHECK_THROWS_AS(grid_from_json(empty_axis), ValidationError);

    nlohmann::ordered_json unknown;
    unknown["nonsense"] = {1};
    CHECK_THROWS_AS(expand_grid(ModelKind::gin, grid_from_json(unknown)), ValidationError);

    nlohmann::ordered_json sage_only;
    sage_only["aggregation"] = {"max"};
    CHECK_THROWS_AS(expand_grid(ModelKind::gin, grid_from_json(sage_only)), ValidationError);
    CHECK_NOTHROW(expand_grid(ModelKind::graphsage, grid_from_json(sage_only)));

    nlohmann::ordered_json bad_lr;
    bad_lr["learning_rate"] = {0.0};
    CHECK_THROWS_WITH(expand_grid(ModelKind::gin, grid_from_json(bad_lr)),
                      Catch::Contains("learning_rate"));

    nlohmann::ordered_json bad_gamma;
    bad_gamma["scheduler"] = {"step_lr"};
    bad_gamma["sched_gamma"] = {1.5};
    CHECK_THROWS_WITH(expand_grid(ModelKind::gin, grid_from_json(bad_gamma)),
                      Catch::Contains("gamma"));
}

TEST_CASE("job ids are stable, purpose-sensitive, and config-content-sensitive") {
    ModelConfig cfg;
    cfg.kind = ModelKind::gin;
    const std::string fp = config_fingerprint(cfg);
    const auto a = job_id("ds", "gin", "degree", 1, 0, "selection", 2, 0, fp);
    const auto b = job_id("ds", "gin", "degree", 1, 0, "selection", 2, 0, fp);
    const auto c = job_id("ds", "gin", "degree", 1, 0, "final", 2, 0, fp);
    const auto d = job_id("ds", "gin", "degree", 1, 1, "selection", 2, 0, fp);
    cfg.hidden_units = 999;
    const auto e = job_id("ds", "gin", "degree", 1, 0, "selection", 2, 0, config_fingerprint(cfg));
    CHECK(a == b);
    CHECK(a != c);
    CHECK(a != d);
    CHECK(a != e);
}

TEST_CASE("a ledger from a different experiment is rejected on resume") {
    const auto ds = tiny_dataset(20);
    const auto plan = make_split_plan(ds, 2, 31, 1);
    const auto cfg = stub_experiment(2, 2, 1);
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    const auto trainer = make_stub_trainer([](const TrainRequest&) { return 0.5; });

    TempDir tmp("sched-foreign");
    run_jobs(cfg, ds.name, plan, grid_configs, trainer, tmp.path() / "ledger.ndjson");

    // same directory, edited grid: the old records no longer belong
    auto cfg2 = stub_experiment(2, 2, 1);
    nlohmann::ordered_json grid;
    grid["hidden_units"] = {64, 128};
    cfg2.grid = grid_from_json(grid);
    const auto grid2 = expand_grid(cfg2.model, cfg2.grid);
    CHECK_THROWS_WITH(run_jobs(cfg2, ds.name, plan, grid2, trainer, tmp.path() / "ledger.ndjson"),
                      Catch::Contains("does not belong to this experiment"));
}

TEST_CASE("stub matrix: 2 folds x 3 configs -> 6 selection + 2R final jobs, all done") {
    const auto ds = tiny_dataset(20);
    const auto plan = make_split_plan(ds, 2, 31, 3);
    const auto cfg = stub_experiment(2, 3, 3);
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    const auto trainer = make_stub_trainer([](const TrainRequest&) { return 0.5; });

    TempDir tmp("sched-matrix");
    const auto result = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                 tmp.path() / "ledger.ndjson");
    CHECK(result.executed == 6 + 2 * 3);
    CHECK(result.skipped == 0);
    REQUIRE(result.report.has_value());
    CHECK(result.audit.pass);

    // ledger completeness: every job in a terminal state
    JobLedger ledger(tmp.path() / "ledger.ndjson");
    CHECK(ledger.size() == 12);
    int done = 0;
    for (const auto& e : ledger.all()) done += e.record.status == RunStatus::done;
    CHECK(done == 12);
}

TEST_CASE("interrupt after 4 jobs, resume executes exactly the remaining ones") {
    const auto ds = tiny_dataset(20);
    const auto plan = make_split_plan(ds, 2, 31, 2);
    auto cfg = stub_experiment(2, 3, 2);
    cfg.workers = 1;
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    const auto trainer = make_stub_trainer([](const TrainRequest&) { return 0.5; });

    TempDir tmp("sched-resume");
    const auto partial = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                  tmp.path() / "ledger.ndjson", 4);
    CHECK(partial.executed == 4);
    CHECK_FALSE(partial.report.has_value());

    const auto rest = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                               tmp.path() / "ledger.ndjson");
    CHECK(rest.skipped == 4);
    CHECK(rest.executed == (6 - 4) + 2 * 2);
    REQUIRE(rest.report.has_value());

    // a second rerun is a no-op
    const auto again = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                tmp.path() / "ledger.ndjson");
    CHECK(again.executed == 0);
    CHECK(again.skipped == 10);
    CHECK(report_to_json(*again.report) == report_to_json(*rest.report));
}

TEST_CASE("reports are identical for 1 and 8 workers (real trainer)") {
    const auto ds = make_feature_count_task(24, 99);
    auto fd = std::make_shared<FeaturizedDataset>(
        build_features(ds, {FeatureMode::one_hot_label}));

    nlohmann::ordered_json grid;
    grid["hidden_units"] = {4, 8};
    ExperimentConfig cfg;
    cfg.dataset_path = "unused";
    cfg.features.mode = FeatureMode::one_hot_label;
    cfg.model = ModelKind::baseline_deepsets;
    cfg.grid = grid_from_json(grid);
    cfg.k = 2;
    cfg.seed = 7;
    cfg.r_runs = 2;
    cfg.max_epochs = 8;
    cfg.patience = 8;
    cfg.budget_seconds = 120;

    const auto plan = make_split_plan(ds, cfg.k, cfg.seed, cfg.r_runs);
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    const auto trainer = make_neural_trainer(fd);

    TempDir t1("sched-w1"), t8("sched-w8");
    cfg.workers = 1;
    const auto r1 = run_jobs(cfg, ds.name, plan, grid_configs, trainer, t1.path() / "l.ndjson");
    cfg.workers = 8;
    const auto r8 = run_jobs(cfg, ds.name, plan, grid_configs, trainer, t8.path() / "l.ndjson");
    REQUIRE(r1.report.has_value());
    REQUIRE(r8.report.has_value());
    CHECK(report_to_json(*r1.report).dump() == report_to_json(*r8.report).dump());
}

TEST_CASE("a config that always exceeds its budget is never selected and annotated OOR") {
    const auto ds = tiny_dataset(20);
    const auto plan = make_split_plan(ds, 2, 31, 1);
    const auto cfg = stub_experiment(2, 3, 1);
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    const auto trainer = [&](const TrainRequest& req) {
        RunRecord rec = make_stub_trainer([](const TrainRequest&) { return 0.9; })(req);
        if (testsupport::is_selection(req) && testsupport::config_index_of(req) == 1) {
            rec.status = RunStatus::oor;
            rec.final_valid_score.reset();
            rec.final_test_score.reset();
        }
        return rec;
    };

    TempDir tmp("sched-partial-oor");
    const auto result = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                 tmp.path() / "ledger.ndjson");
    REQUIRE(result.report.has_value());
    CHECK_FALSE(result.report->oor);
    for (const auto& fold : result.report->folds) {
        REQUIRE(fold.selected_config_index.has_value());
        CHECK(*fold.selected_config_index != 1);
    }
}

TEST_CASE("whole-grid OOR marks the cell OOR") {
    const auto ds = tiny_dataset(20);
    const auto plan = make_split_plan(ds, 2, 31, 1);
    const auto cfg = stub_experiment(2, 2, 1);
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    const auto trainer = [&](const TrainRequest& req) {
        RunRecord rec;
        rec.config = req.config;
        rec.seeds = req.seeds;
        rec.status = RunStatus::oor;
        rec.access_log.push_back({req.set_prefix + "/train", "train", req.train_idx});
        return rec;
    };
    TempDir tmp("sched-oor");
    const auto result = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                 tmp.path() / "ledger.ndjson");
    REQUIRE(result.report.has_value());
    CHECK(result.report->oor);
    for (const auto& fold : result.report->folds) CHECK(fold.oor);
    CHECK(result.executed == 4);  // selection only; no final jobs exist
}

TEST_CASE("a crashing job is retried once, then recorded failed") {
    const auto ds = tiny_dataset(20);
    const auto plan = make_split_plan(ds, 2, 31, 1);
    const auto cfg = stub_experiment(2, 2, 1);
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);

    SECTION("transient crash recovers on the retry") {
        std::atomic<int> calls{0};
        const auto trainer = [&](const TrainRequest& req) {
            if (testsupport::is_selection(req) && testsupport::config_index_of(req) == 0 &&
                testsupport::fold_of(req) == 0 && calls.fetch_add(1) == 0)
                throw std::runtime_error("simulated worker crash");
            return make_stub_trainer([](const TrainRequest&) { return 0.5; })(req);
        };
        TempDir tmp("sched-crash1");
        const auto result = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                     tmp.path() / "ledger.ndjson");
        REQUIRE(result.report.has_value());
        CHECK(calls.load() == 2);  // the crash, then the successful retry
        JobLedger ledger(tmp.path() / "ledger.ndjson");
        for (const auto& e : ledger.all()) CHECK(e.record.status == RunStatus::done);
    }

    SECTION("persistent crash becomes a terminal failed record, others still run") {
        const auto trainer = [&](const TrainRequest& req) -> RunRecord {
            if (testsupport::is_selection(req) && testsupport::config_index_of(req) == 0)
                throw std::runtime_error("permanent crash");
            return make_stub_trainer([](const TrainRequest&) { return 0.5; })(req);
        };
        TempDir tmp("sched-crash2");
        const auto result = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                     tmp.path() / "ledger.ndjson");
        REQUIRE(result.report.has_value());
        JobLedger ledger(tmp.path() / "ledger.ndjson");
        int failed = 0, done = 0;
        for (const auto& e : ledger.all()) {
            failed += e.record.status == RunStatus::failed;
            done += e.record.status == RunStatus::done;
        }
        CHECK(failed == 2);  // config 0 on both folds
        CHECK(failed + done == static_cast<int>(ledger.size()));
        for (const auto& fold : result.report->folds)
            CHECK(*fold.selected_config_index == 1);
    }
}

TEST_CASE("budget termination lands within budget plus grace") {
    // cooperative cancellation: the trainer polls its deadline between
    // batches, so a job wanting 2x its budget must exit within budget + 5s
    const auto ds = tiny_dataset(20);
    const auto plan = make_split_plan(ds, 2, 31, 1);
    auto cfg = stub_experiment(2, 1, 1);
    cfg.budget_seconds = 0.2;
    const auto grid_configs = expand_grid(cfg.model, cfg.grid);
    const auto trainer = [&](const TrainRequest& req) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };
        RunRecord rec;
        rec.config = req.config;
        rec.access_log.push_back({req.set_prefix + "/train", "train", req.train_idx});
        while (elapsed() < 2.0 * req.budget_seconds) {  // wants twice the budget
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
            if (elapsed() > req.budget_seconds) {  // deadline poll
                rec.status = RunStatus::oor;
                return rec;
            }
        }
        rec.status = RunStatus::done;
        rec.final_valid_score = 0.5;
        return rec;
    };
    TempDir tmp("sched-budget");
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_jobs(cfg, ds.name, plan, grid_configs, trainer,
                                 tmp.path() / "ledger.ndjson");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    REQUIRE(result.report.has_value());
    CHECK(result.report->oor);
    CHECK(wall < 2 * (cfg.budget_seconds + 5.0));
}
