#include <catch2/catch.hpp>

#include <map>
#include <set>

#include "gnnbench/splits.hpp"
#include "support/temp_dir.hpp"

using namespace gnnbench;
using testsupport::TempDir;

namespace {

GraphDataset dataset_with_classes(const std::vector<int>& class_sizes) {
    GraphDataset ds;
    ds.name = "synthetic";
    for (std::size_t c = 0; c < class_sizes.size(); ++c) {
        for (int i = 0; i < class_sizes[c]; ++i) {
            Graph g;
            g.node_count = 2;
            g.edges = {{0, 1}};
            g.label = static_cast<int>(c);
            ds.graphs.push_back(g);
        }
    }
    ds.num_classes = static_cast<int>(class_sizes.size());
    recount_classes(ds);
    return ds;
}

// Per-fold class counts of a plan, independent recomputation.
std::vector<std::vector<int>> fold_class_counts(const SplitPlan& plan, const GraphDataset& ds) {
    std::vector<std::vector<int>> counts(plan.k, std::vector<int>(ds.num_classes, 0));
    for (int f = 0; f < plan.k; ++f)
        for (int idx : plan.folds[f]) ++counts[f][ds.graphs[idx].label];
    return counts;
}

}  // namespace

TEST_CASE("round-robin stratification on N=10, classes {6,4}, k=5") {
    const auto ds = dataset_with_classes({6, 4});
    const auto plan = make_split_plan(ds, 5, 1234, 1);

    // Independent oracle: per-class round-robin starting at (class index mod k)
    // forces these per-fold class counts regardless of the shuffle.
    std::vector<std::vector<int>> expected(5, std::vector<int>(2, 0));
    for (int j = 0; j < 6; ++j) ++expected[(0 + j) % 5][0];
    for (int j = 0; j < 4; ++j) ++expected[(1 + j) % 5][1];

    const auto counts = fold_class_counts(plan, ds);
    CHECK(counts == expected);
    for (int f = 0; f < 5; ++f) CHECK(plan.folds[f].size() == 2);
    int c0 = 0, c1 = 0;
    for (const auto& per_fold : counts) {
        c0 += per_fold[0];
        c1 += per_fold[1];
    }
    CHECK(c0 == 6);
    CHECK(c1 == 4);
}

TEST_CASE("k = N yields singleton folds covering everything") {
    const auto ds = dataset_with_classes({5, 5});
    const auto plan = make_split_plan(ds, 10, 7, 1);
    std::set<int> seen;
    for (const auto& fold : plan.folds) {
        REQUIRE(fold.size() == 1);
        seen.insert(fold[0]);
    }
    CHECK(seen.size() == 10);
}

TEST_CASE("same inputs give byte-identical serialized plans") {
    const auto ds = dataset_with_classes({9, 7, 5});
    const auto a = make_split_plan(ds, 5, 99, 3);
    const auto b = make_split_plan(ds, 5, 99, 3);
    CHECK(split_plan_to_json(a).dump() == split_plan_to_json(b).dump());
}

TEST_CASE("split plan save/load round trip") {
    const auto ds = dataset_with_classes({8, 6});
    const auto plan = make_split_plan(ds, 4, 5, 2);
    TempDir tmp("splits");
    save_split_plan(plan, tmp.path() / "plan.json");
    const auto back = load_split_plan(tmp.path() / "plan.json");
    CHECK(split_plan_to_json(plan) == split_plan_to_json(back));
}

TEST_CASE("plan validation catches mismatches and corruption") {
    const auto ds = dataset_with_classes({8, 6});
    const auto plan = make_split_plan(ds, 4, 5, 2);

    SECTION("dataset size mismatch") {
        const auto other = dataset_with_classes({5, 5});
        REQUIRE_THROWS_WITH(validate_plan_against(plan, other), Catch::Contains("does not match"));
    }
    SECTION("dataset name mismatch") {
        auto other = dataset_with_classes({8, 6});
        other.name = "different";
        REQUIRE_THROWS_AS(validate_plan_against(plan, other), ValidationError);
    }
    SECTION("overlapping folds fail structural validation") {
        auto j = split_plan_to_json(plan);
        j["folds"][0][0] = j["folds"][1][0].get<int>();
        REQUIRE_THROWS_WITH(split_plan_from_json(j), Catch::Contains("partition"));
    }
    SECTION("validation overlapping test fold") {
        auto j = split_plan_to_json(plan);
        j["inner"][0]["valid"][0] = j["folds"][0][0].get<int>();
        REQUIRE_THROWS_AS(split_plan_from_json(j), ValidationError);
    }
}

TEST_CASE("preconditions: k too small, r_runs too small, k too large") {
    const auto ds = dataset_with_classes({6, 4});
    CHECK_THROWS_WITH(make_split_plan(ds, 1, 0, 1), Catch::Contains("at least 2"));
    CHECK_THROWS_WITH(make_split_plan(ds, 5, 0, 0), Catch::Contains("r_runs"));
    CHECK_THROWS_WITH(make_split_plan(ds, 11, 0, 1), Catch::Contains("exceeds dataset size"));
}

TEST_CASE("partition and stratification invariants hold over random cases") {
    Rng rng(20240501);
    for (int iter = 0; iter < 200; ++iter) {
        const int k = std::vector<int>{2, 5, 10}[rng.uniform_int(3)];
        const int n_classes = 1 + static_cast<int>(rng.uniform_int(6));
        std::vector<int> sizes;
        for (int c = 0; c < n_classes; ++c)
            sizes.push_back(k + static_cast<int>(rng.uniform_int(80)));
        const auto ds = dataset_with_classes(sizes);
        const int n = static_cast<int>(ds.graphs.size());
        const int r_runs = 1 + static_cast<int>(rng.uniform_int(3));
        const auto plan = make_split_plan(ds, k, rng.next_u64(), r_runs);

        INFO("iter " << iter << " k=" << k << " n=" << n);
        REQUIRE_NOTHROW(validate_split_plan(plan));

        // stratification bound: per-class fold counts within 1 of the ideal share
        const auto counts = fold_class_counts(plan, ds);
        for (int f = 0; f < k; ++f)
            for (int c = 0; c < n_classes; ++c) {
                const double ideal = static_cast<double>(sizes[c]) / k;
                REQUIRE(std::abs(counts[f][c] - ideal) < 2.0);
            }

        // inner split: stratified ~10% with at least one sample per class
        for (int f = 0; f < k; ++f) {
            std::map<int, int> train_class, valid_class;
            for (int idx : plan.inner[f].train) ++train_class[ds.graphs[idx].label];
            for (int idx : plan.inner[f].valid) ++valid_class[ds.graphs[idx].label];
            for (const auto& [cls, v_count] : valid_class) {
                const int total = v_count + train_class[cls];
                const int want = std::max<int>(1, std::llround(0.1 * total));
                REQUIRE(v_count == want);
            }
            REQUIRE_FALSE(plan.inner[f].valid.empty());
        }
    }
}

TEST_CASE("changing the seed changes the assignment (soft check)") {
    const auto ds = dataset_with_classes({40, 30});
    int differing = 0;
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto a = make_split_plan(ds, 5, s, 1);
        const auto b = make_split_plan(ds, 5, s + 1000, 1);
        if (split_plan_to_json(a) != split_plan_to_json(b)) ++differing;
    }
    // overwhelming probability, not a hard guarantee
    CHECK(differing >= 27);
}

TEST_CASE("final holdouts stay inside the training portion") {
    const auto ds = dataset_with_classes({12, 10});
    const auto plan = make_split_plan(ds, 4, 3, 3);
    for (int f = 0; f < plan.k; ++f) {
        const std::set<int> test(plan.folds[f].begin(), plan.folds[f].end());
        for (int r = 0; r < 3; ++r) {
            for (int idx : plan.final_holdouts[f][r]) CHECK_FALSE(test.count(idx));
            const auto train = plan.final_train(f, r);
            std::set<int> train_set(train.begin(), train.end());
            for (int idx : plan.final_holdouts[f][r]) CHECK_FALSE(train_set.count(idx));
            CHECK(train.size() + plan.final_holdouts[f][r].size() + test.size() ==
                  ds.graphs.size());
        }
    }
}
