#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnnbench/graph.hpp"
#include "gnnbench/rng.hpp"

namespace gnnbench {

// Deterministic outer k-fold partition with per-fold inner 90/10 splits and
// the pre-materialized early-stopping holdouts for the R final runs. The plan
// is the leakage contract: every index a run may touch is written down here
// before any training happens.
struct SplitPlan {
    struct InnerSplit {
        std::vector<int> train;
        std::vector<int> valid;
    };

    std::string dataset_name;
    std::uint64_t seed = 0;
    int k = 0;
    std::vector<std::vector<int>> folds;            // test folds F_1..F_k
    std::vector<InnerSplit> inner;                  // per fold
    std::vector<std::vector<std::vector<int>>> final_holdouts;  // [fold][run]

    int total() const {
        std::size_t n = 0;
        for (const auto& f : folds) n += f.size();
        return static_cast<int>(n);
    }

    int runs() const {
        return final_holdouts.empty() ? 0 : static_cast<int>(final_holdouts.front().size());
    }

    // All indices outside fold i, sorted: the outer training portion.
    std::vector<int> outer_train(int fold) const {
        std::vector<bool> in_test(total(), false);
        for (int idx : folds.at(fold)) in_test[idx] = true;
        std::vector<int> out;
        out.reserve(total() - folds.at(fold).size());
        for (int i = 0; i < total(); ++i)
            if (!in_test[i]) out.push_back(i);
        return out;
    }

    // Final-run training set: outer training portion minus that run's holdout.
    std::vector<int> final_train(int fold, int run) const {
        std::set<int> held(final_holdouts.at(fold).at(run).begin(),
                           final_holdouts.at(fold).at(run).end());
        std::vector<int> out;
        for (int idx : outer_train(fold))
            if (!held.count(idx)) out.push_back(idx);
        return out;
    }
};

namespace split_detail {

// Stratified pick of ~10% per class, at least one sample. Returns the picked
// (validation/holdout) side; the rest stays for training.
inline std::vector<int> stratified_tenth(const std::vector<int>& pool,
                                         const std::vector<int>& labels_by_index,
                                         std::uint64_t seed) {
    std::map<int, std::vector<int>> per_class;
    for (int idx : pool) per_class[labels_by_index[idx]].push_back(idx);
    std::vector<int> picked;
    for (auto& [cls, members] : per_class) {
        Rng rng(seed_mix({seed, static_cast<std::uint64_t>(cls)}));
        rng.shuffle(members);
        const auto want = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(members.size()))));
        for (std::size_t i = 0; i < want && i < members.size(); ++i)
            picked.push_back(members[i]);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

inline std::vector<int> sorted_complement(const std::vector<int>& pool,
                                          const std::vector<int>& removed) {
    std::set<int> gone(removed.begin(), removed.end());
    std::vector<int> out;
    out.reserve(pool.size() - removed.size());
    for (int idx : pool)
        if (!gone.count(idx)) out.push_back(idx);
    return out;
}

}  // namespace split_detail

// Stratification: per-class seeded shuffle, then round-robin over folds
// starting at fold (class_index mod k). Per-class fold counts differ by at
// most one, so class proportions survive in every fold.
inline SplitPlan make_split_plan(const GraphDataset& ds, int k, std::uint64_t seed, int r_runs) {
    const int n = static_cast<int>(ds.graphs.size());
    if (k < 2) throw ValidationError("make_split_plan: k must be at least 2");
    if (r_runs < 1) throw ValidationError("make_split_plan: r_runs must be at least 1");
    if (k > n) throw ValidationError("make_split_plan: k exceeds dataset size");

    std::vector<int> labels(n);
    std::map<int, std::vector<int>> per_class;
    for (int i = 0; i < n; ++i) {
        labels[i] = ds.graphs[i].label;
        per_class[labels[i]].push_back(i);
    }

    SplitPlan plan;
    plan.dataset_name = ds.name;
    plan.seed = seed;
    plan.k = k;
    plan.folds.assign(k, {});

    // Classes smaller than k are legal: round-robin just leaves some folds
    // without that class, still within the +/-1 bound. The round-robin cursor
    // carries across classes so overall fold sizes also balance to +/-1
    // (k = N gives singleton folds).
    std::size_t cursor = 0;
    for (auto& [cls, members] : per_class) {
        Rng rng(seed_mix({seed, 0x666F6C64ULL /* 'fold' */, static_cast<std::uint64_t>(cls)}));
        rng.shuffle(members);
        for (int idx : members) plan.folds[cursor++ % k].push_back(idx);
    }
    for (auto& f : plan.folds) {
        if (f.empty())
            throw ValidationError("make_split_plan: k leaves an empty fold; reduce k");
        std::sort(f.begin(), f.end());
    }

    for (int i = 0; i < k; ++i) {
        const auto train_pool = plan.outer_train(i);
        SplitPlan::InnerSplit split;
        split.valid = split_detail::stratified_tenth(
            train_pool, labels, seed_mix({seed, 0x696E6E65ULL /* 'inne' */, static_cast<std::uint64_t>(i)}));
        split.train = split_detail::sorted_complement(train_pool, split.valid);
        plan.inner.push_back(std::move(split));

        std::vector<std::vector<int>> holdouts;
        for (int r = 0; r < r_runs; ++r)
            holdouts.push_back(split_detail::stratified_tenth(
                train_pool, labels,
                seed_mix({seed, 0x686F6C64ULL /* 'hold' */, static_cast<std::uint64_t>(i),
                          static_cast<std::uint64_t>(r)})));
        plan.final_holdouts.push_back(std::move(holdouts));
    }
    return plan;
}

// Structural invariants that do not need the dataset: partition property,
// inner-split consistency, holdout containment.
inline void validate_split_plan(const SplitPlan& plan) {
    if (plan.k < 2 || static_cast<int>(plan.folds.size()) != plan.k)
        throw ValidationError("split plan: fold count inconsistent with k");
    const int n = plan.total();
    std::vector<int> cover(n, 0);
    for (const auto& fold : plan.folds) {
        if (fold.empty()) throw ValidationError("split plan: empty fold");
        for (int idx : fold) {
            if (idx < 0 || idx >= n) throw ValidationError("split plan: index out of range");
            ++cover[idx];
        }
    }
    for (int c : cover)
        if (c != 1) throw ValidationError("split plan: folds are not a partition of [0, N)");

    if (static_cast<int>(plan.inner.size()) != plan.k ||
        static_cast<int>(plan.final_holdouts.size()) != plan.k)
        throw ValidationError("split plan: inner/holdout arrays must have k entries");
    const int r = plan.runs();
    for (int i = 0; i < plan.k; ++i) {
        std::set<int> test(plan.folds[i].begin(), plan.folds[i].end());
        std::set<int> train(plan.inner[i].train.begin(), plan.inner[i].train.end());
        std::set<int> valid(plan.inner[i].valid.begin(), plan.inner[i].valid.end());
        if (train.size() + valid.size() + test.size() != static_cast<std::size_t>(n))
            throw ValidationError("split plan: inner split does not partition the training portion");
        for (int idx : valid)
            if (test.count(idx) || train.count(idx))
                throw ValidationError("split plan: inner validation overlaps train or test");
        for (int idx : train)
            if (test.count(idx))
                throw ValidationError("split plan: inner train overlaps the test fold");
        if (static_cast<int>(plan.final_holdouts[i].size()) != r)
            throw ValidationError("split plan: ragged final_holdouts");
        for (const auto& holdout : plan.final_holdouts[i]) {
            if (holdout.empty()) throw ValidationError("split plan: empty final holdout");
            for (int idx : holdout)
                if (test.count(idx) || idx < 0 || idx >= n)
                    throw ValidationError("split plan: final holdout touches the test fold");
        }
    }
}

inline void validate_plan_against(const SplitPlan& plan, const GraphDataset& ds) {
    if (plan.dataset_name != ds.name)
        throw ValidationError("split plan names dataset '" + plan.dataset_name +
                              "' but got '" + ds.name + "'");
    if (plan.total() != static_cast<int>(ds.graphs.size()))
        throw ValidationError("split plan size " + std::to_string(plan.total()) +
                              " does not match dataset size " +
                              std::to_string(ds.graphs.size()));
}

inline nlohmann::json split_plan_to_json(const SplitPlan& plan) {
    nlohmann::json j;
    j["dataset"] = plan.dataset_name;
    j["seed"] = plan.seed;
    j["k"] = plan.k;
    j["folds"] = plan.folds;
    nlohmann::json inner = nlohmann::json::array();
    for (const auto& s : plan.inner) inner.push_back({{"train", s.train}, {"valid", s.valid}});
    j["inner"] = std::move(inner);
    j["final_holdouts"] = plan.final_holdouts;
    return j;
}

inline SplitPlan split_plan_from_json(const nlohmann::json& j) {
    SplitPlan plan;
    try {
        plan.dataset_name = j.at("dataset").get<std::string>();
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.k = j.at("k").get<int>();
        plan.folds = j.at("folds").get<std::vector<std::vector<int>>>();
        for (const auto& js : j.at("inner")) {
            SplitPlan::InnerSplit s;
            s.train = js.at("train").get<std::vector<int>>();
            s.valid = js.at("valid").get<std::vector<int>>();
            plan.inner.push_back(std::move(s));
        }
        plan.final_holdouts =
            j.at("final_holdouts").get<std::vector<std::vector<std::vector<int>>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("split plan json: ") + e.what());
    }
    validate_split_plan(plan);
    return plan;
}

inline void save_split_plan(const SplitPlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << split_plan_to_json(plan).dump(2) << '\n';
}

inline SplitPlan load_split_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return split_plan_from_json(j);
}

}  // namespace gnnbench
