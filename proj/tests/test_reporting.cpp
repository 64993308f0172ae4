#include <catch2/catch.hpp>

#include <fstream>
#include <sstream>

#include "gnnbench/report.hpp"
#include "gnnbench/synthetic.hpp"
#include "support/stub_trainers.hpp"
#include "support/temp_dir.hpp"

using namespace gnnbench;
using testsupport::TempDir;

namespace {

AssessmentReport stub_report(const std::string& model, const std::string& dataset, double mean,
                             double std_dev, const std::string& feature_mode = "uninformative",
                             bool oor = false) {
    AssessmentReport r;
    r.model = model;
    r.dataset = dataset;
    r.feature_mode = feature_mode;
    r.k = 2;
    r.R = 1;
    r.mean = mean;
    r.std_dev = std_dev;
    r.valid_mean = mean + 0.02;
    r.oor = oor;
    FoldOutcome f;
    f.fold = 0;
    f.oor = oor;
    if (!oor) {
        f.selected_config_index = 0;
        f.selected_config = ModelConfig{};
        f.run_scores = {mean};
        f.fold_score = mean;
    }
    r.folds.push_back(f);
    f.fold = 1;
    r.folds.push_back(f);
    return r;
}

}  // namespace

TEST_CASE("cells format as one-decimal percents") {
    CHECK(format_cell(stub_report("gin", "d", 0.705, 0.0143)) == "70.5 \xC2\xB1 1.4");
    CHECK(format_cell(stub_report("gin", "d", 1.0, 0.0)) == "100.0 \xC2\xB1 0.0");
    CHECK(format_cell(stub_report("gin", "d", 0.0, 0.0, "uninformative", true)) == "OOR");
}

TEST_CASE("results table holds a cell for every report") {
    const std::vector<AssessmentReport> reports{
        stub_report("gin", "alpha", 0.8, 0.02),
        stub_report("baseline_deepsets", "alpha", 0.6, 0.01),
    };
    const std::string table = render_results_table(reports);
    CHECK(table.find("GIN") != std::string::npos);
    CHECK(table.find("Baseline-DeepSets") != std::string::npos);
    CHECK(table.find("80.0") != std::string::npos);
    CHECK(table.find("60.0") != std::string::npos);
    CHECK(table.find("alpha (no_features)") != std::string::npos);
}

TEST_CASE("OOR cells appear only under whole-grid OOR") {
    const std::vector<AssessmentReport> reports{
        stub_report("gin", "alpha", 0.0, 0.0, "uninformative", true)};
    const std::string table = render_results_table(reports);
    CHECK(table.find("OOR") != std::string::npos);
}

TEST_CASE("depth analysis emits medians incl. halves") {
    auto r = stub_report("gin", "alpha", 0.8, 0.02);
    r.median_layers = 3.5;
    const std::string csv = depth_analysis_csv({r});
    CHECK(csv.find("gin,alpha,uninformative,3.5") != std::string::npos);
}

TEST_CASE("compare emits published/validation/test triples with a gap column") {
    TempDir tmp("compare");
    testsupport::write_file(tmp.path() / "pub.csv",
                            "model,dataset,accuracy\ngin,alpha,0.76\n");
    const auto published = load_published_csv(tmp.path() / "pub.csv");
    auto r1 = stub_report("gin", "alpha", 0.8, 0.02);
    auto r2 = stub_report("baseline_deepsets", "alpha", 0.5, 0.01);
    const std::string csv = compare_csv({r1, r2}, &published);

    std::istringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "model,dataset,feature_mode,published,valid_mean,test_mean,gap");
    int rows = 0;
    while (std::getline(ss, line)) {
        ++rows;
        const auto last_comma = line.rfind(',');
        const double gap = std::stod(line.substr(last_comma + 1));
        CHECK(gap >= 0.0);  // stub reports have valid_mean >= test_mean
    }
    CHECK(rows == 2);
    CHECK(csv.find("gin,alpha,uninformative,0.76") != std::string::npos);
}

TEST_CASE("malformed published csv is rejected") {
    TempDir tmp("compare-bad");
    testsupport::write_file(tmp.path() / "pub.csv", "gin,alpha,not-a-number\n");
    CHECK_THROWS_AS(load_published_csv(tmp.path() / "pub.csv"), ValidationError);
}

TEST_CASE("verify recomputes a report from its ledger and detects tampering") {
    // run a real tiny experiment into a directory laid out like the CLI does
    const auto ds = make_feature_count_task(24, 5);
    TempDir tmp("verify");
    save_dataset(ds, tmp.path() / "data.json");

    nlohmann::ordered_json grid;
    grid["hidden_units"] = {4};
    ExperimentConfig cfg;
    cfg.dataset_path = (tmp.path() / "data.json").string();
    cfg.features.mode = FeatureMode::one_hot_label;
    cfg.model = ModelKind::baseline_deepsets;
    cfg.grid = grid_from_json(grid);
    cfg.k = 2;
    cfg.seed = 3;
    cfg.r_runs = 1;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    cfg.budget_seconds = 120;
    cfg.workers = 1;
    cfg.output_dir = tmp.path().string();

    const auto plan = make_split_plan(ds, cfg.k, cfg.seed, cfg.r_runs);
    save_split_plan(plan, tmp.path() / "splits.json");
    {
        std::ofstream out(tmp.path() / "experiment.json");
        out << experiment_to_json(cfg).dump(2) << '\n';
    }
    auto fd = std::make_shared<FeaturizedDataset>(build_features(ds, cfg.features));
    const auto result = run_jobs(cfg, ds.name, plan, expand_grid(cfg.model, cfg.grid),
                                 make_neural_trainer(fd), tmp.path() / "ledger.ndjson");
    REQUIRE(result.report.has_value());
    {
        std::ofstream out(tmp.path() / "assessment.json");
        out << report_to_json(*result.report).dump(2) << '\n';
    }

    std::string diag;
    CHECK(verify_output_dir(tmp.path(), &diag));

    // tamper with the stored mean
    auto j = report_to_json(*result.report);
    j["mean"] = 0.999;
    {
        std::ofstream out(tmp.path() / "assessment.json");
        out << j.dump(2) << '\n';
    }
    CHECK_FALSE(verify_output_dir(tmp.path(), &diag));
    CHECK(diag.find("differs") != std::string::npos);
}

TEST_CASE("load_reports_from_dir finds nested assessments") {
    TempDir tmp("load-reports");
    auto r = stub_report("gin", "alpha", 0.8, 0.02);
    testsupport::write_file(tmp.path() / "a" / "assessment.json", report_to_json(r).dump(2));
    r.model = "graphsage";
    testsupport::write_file(tmp.path() / "b" / "assessment.json", report_to_json(r).dump(2));
    const auto reports = load_reports_from_dir(tmp.path());
    CHECK(reports.size() == 2);
    CHECK_THROWS_AS(load_reports_from_dir(tmp.path() / "missing"), std::exception);
}
