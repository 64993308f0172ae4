#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gnnbench/models.hpp"
#include "gnnbench/splits.hpp"

namespace gnnbench {

struct EarlyStopPolicy {
    int patience = 50;
    StopCriterion criterion = StopCriterion::validation_loss;
    int max_epochs = 200;
};

struct RunSeeds {
    std::uint64_t init = 0;
    std::uint64_t shuffle = 0;
    std::uint64_t dropout = 0;
};

enum class RunStatus { done, oor, diverged, failed };

inline std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::done: return "done";
        case RunStatus::oor: return "oor";
        case RunStatus::diverged: return "diverged";
        case RunStatus::failed: return "failed";
    }
    return "?";
}

inline RunStatus run_status_from_string(const std::string& s) {
    if (s == "done") return RunStatus::done;
    if (s == "oor") return RunStatus::oor;
    if (s == "diverged") return RunStatus::diverged;
    if (s == "failed") return RunStatus::failed;
    throw ValidationError("unknown run status: " + s);
}

struct EpochMetrics {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double valid_loss = 0.0;
    double valid_acc = 0.0;
};

// One line of the data-access trail: which index set a run touched and why.
// The audit replays these against the split plan.
struct AccessEntry {
    std::string set_id;
    std::string purpose;  // train | validate | test
    std::vector<int> indices;
};

// Full trace of one training run; everything the auditor and the aggregator
// need, nothing hidden.
struct RunRecord {
    ModelConfig config;
    RunSeeds seeds;
    std::vector<EpochMetrics> epoch_metrics;
    int stop_epoch = 0;
    int best_epoch = 0;
    std::optional<double> final_valid_score;
    std::optional<double> final_test_score;
    std::vector<AccessEntry> access_log;
    RunStatus status = RunStatus::done;
    double elapsed_seconds = 0.0;
};

struct TrainRequest {
    ModelConfig config;
    std::vector<int> train_idx;
    std::vector<int> valid_idx;
    std::optional<std::vector<int>> test_idx;
    EarlyStopPolicy policy;
    RunSeeds seeds;
    double budget_seconds = 600.0;
    std::string set_prefix;  // namespaces access-log ids, e.g. "fold3/selection/cfg2"
};

using TrainFn = std::function<RunRecord(const TrainRequest&)>;

inline nlohmann::json run_record_to_json(const RunRecord& r) {
    nlohmann::json j;
    j["config"] = config_to_json(r.config);
    j["seeds"] = {{"init", r.seeds.init}, {"shuffle", r.seeds.shuffle}, {"dropout", r.seeds.dropout}};
    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& m : r.epoch_metrics)
        metrics.push_back({m.train_loss, m.train_acc, m.valid_loss, m.valid_acc});
    j["epoch_metrics"] = std::move(metrics);
    j["stop_epoch"] = r.stop_epoch;
    j["best_epoch"] = r.best_epoch;
    j["final_valid_score"] = r.final_valid_score ? nlohmann::json(*r.final_valid_score)
                                                 : nlohmann::json(nullptr);
    j["final_test_score"] = r.final_test_score ? nlohmann::json(*r.final_test_score)
                                               : nlohmann::json(nullptr);
    nlohmann::json log = nlohmann::json::array();
    for (const auto& a : r.access_log)
        log.push_back({{"set", a.set_id}, {"purpose", a.purpose}, {"indices", a.indices}});
    j["access_log"] = std::move(log);
    j["status"] = to_string(r.status);
    j["elapsed_seconds"] = r.elapsed_seconds;
    return j;
}

inline RunRecord run_record_from_json(const nlohmann::json& j) {
    RunRecord r;
    try {
        r.config = config_from_json(j.at("config"));
        r.seeds.init = j.at("seeds").at("init").get<std::uint64_t>();
        r.seeds.shuffle = j.at("seeds").at("shuffle").get<std::uint64_t>();
        r.seeds.dropout = j.at("seeds").at("dropout").get<std::uint64_t>();
        for (const auto& m : j.at("epoch_metrics")) {
            EpochMetrics em{m.at(0).get<double>(), m.at(1).get<double>(), m.at(2).get<double>(),
                            m.at(3).get<double>()};
            r.epoch_metrics.push_back(em);
        }
        r.stop_epoch = j.at("stop_epoch").get<int>();
        r.best_epoch = j.at("best_epoch").get<int>();
        if (!j.at("final_valid_score").is_null())
            r.final_valid_score = j.at("final_valid_score").get<double>();
        if (!j.at("final_test_score").is_null())
            r.final_test_score = j.at("final_test_score").get<double>();
        for (const auto& a : j.at("access_log")) {
            AccessEntry e;
            e.set_id = a.at("set").get<std::string>();
            e.purpose = a.at("purpose").get<std::string>();
            e.indices = a.at("indices").get<std::vector<int>>();
            r.access_log.push_back(std::move(e));
        }
        r.status = run_status_from_string(j.at("status").get<std::string>());
        r.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("run record json: ") + e.what());
    }
    return r;
}

// Patience bookkeeping: strict improvement of the monitored criterion resets
// the counter; training stops once `patience` epochs pass without one.
struct EarlyStopTracker {
    StopCriterion criterion;
    int patience;
    double best_value;
    int best_epoch = 0;

    EarlyStopTracker(StopCriterion c, int n)
        : criterion(c),
          patience(n),
          best_value(c == StopCriterion::validation_loss
                         ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity()) {}

    bool observe(int epoch, double value) {
        const bool better = criterion == StopCriterion::validation_loss ? value < best_value
                                                                        : value > best_value;
        if (better) {
            best_value = value;
            best_epoch = epoch;
        }
        return better;
    }

    bool should_stop(int epoch) const { return epoch - best_epoch >= patience; }
};

namespace train_detail {

struct EvalResult {
    double loss = 0.0;
    double acc = 0.0;
};

inline EvalResult evaluate(Model& model, const FeaturizedDataset& fd,
                           const std::vector<int>& indices, int batch_size) {
    EvalResult out;
    long long correct = 0;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < indices.size(); start += batch_size) {
        const std::size_t end = std::min(indices.size(), start + batch_size);
        const auto batch =
            make_batch(fd, std::span<const int>(indices.data() + start, end - start));
        const Tensor2 logits = model.predict(batch);
        auto [loss, probs] = softmax_cross_entropy(logits, batch.labels);
        loss_sum += loss * batch.num_graphs;
        const auto pred = argmax_rows(logits);
        for (int i = 0; i < batch.num_graphs; ++i) correct += pred[i] == batch.labels[i];
    }
    out.loss = loss_sum / static_cast<double>(indices.size());
    out.acc = static_cast<double>(correct) / static_cast<double>(indices.size());
    return out;
}

}  // namespace train_detail

// Trains one configuration with patience-based early stopping: training halts
// once `patience` epochs pass without strict improvement of the monitored
// criterion, and the model state from the best epoch is what gets scored.
// Runs past their wall-clock budget come back marked OOR and unusable;
// non-finite losses mark the run diverged.
inline RunRecord train_with_early_stopping(const FeaturizedDataset& fd, const TrainRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    if (req.budget_seconds <= 0.0) throw ValidationError("train: budget must be positive");
    if (req.train_idx.empty() || req.valid_idx.empty())
        throw ValidationError("train: empty train or validation set");
    {
        std::set<int> train_set(req.train_idx.begin(), req.train_idx.end());
        for (int idx : req.valid_idx)
            if (train_set.count(idx))
                throw ValidationError("train: train and validation sets overlap");
    }

    EarlyStopPolicy policy = req.policy;
    if (req.config.stop_criterion) policy.criterion = *req.config.stop_criterion;
    if (req.config.max_epochs) policy.max_epochs = *req.config.max_epochs;
    if (policy.patience < 1 || policy.max_epochs < 1)
        throw ValidationError("train: patience and max_epochs must be >= 1");

    RunRecord rec;
    rec.config = req.config;
    rec.seeds = req.seeds;
    rec.access_log.push_back({req.set_prefix + "/train", "train", req.train_idx});
    rec.access_log.push_back({req.set_prefix + "/valid", "validate", req.valid_idx});

    Model model(req.config, fd.width, fd.num_classes(), req.seeds.init);
    OptimState optim = req.config.make_optim_state();
    Rng dropout_rng(req.seeds.dropout);

    const int batch_size = std::max(1, req.config.batch_size);
    EarlyStopTracker tracker(policy.criterion, policy.patience);
    std::vector<Tensor2> best_params = model.params().snapshot();

    std::vector<int> order = req.train_idx;
    bool out_of_budget = false;
    for (int epoch = 1; epoch <= policy.max_epochs; ++epoch) {
        if (elapsed() > req.budget_seconds) {
            out_of_budget = true;
            break;
        }
        Rng shuffle_rng(seed_mix({req.seeds.shuffle, static_cast<std::uint64_t>(epoch)}));
        shuffle_rng.shuffle(order);

        double loss_sum = 0.0;
        long long correct = 0;
        bool diverged = false;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            const auto batch =
                make_batch(fd, std::span<const int>(order.data() + start, end - start));
            Tape tape;
            const int logits = model.forward(tape, batch, true, dropout_rng);
            double loss = 0.0;
            try {
                auto [loss_id, probs] = tape.softmax_cross_entropy(logits, batch.labels);
                loss = tape.value(loss_id).at(0, 0);
                if (!std::isfinite(loss)) {
                    diverged = true;
                    break;
                }
                model.params().zero_grads();
                tape.backward(loss_id);
                optimizer_step(model.params(), optim, epoch - 1);
            } catch (const std::domain_error&) {
                diverged = true;
                break;
            }
            loss_sum += loss * batch.num_graphs;
            const auto pred = argmax_rows(tape.value(logits));
            for (int i = 0; i < batch.num_graphs; ++i) correct += pred[i] == batch.labels[i];
            if (elapsed() > req.budget_seconds) {
                out_of_budget = true;
                break;
            }
        }
        if (diverged) {
            rec.status = RunStatus::diverged;
            rec.stop_epoch = epoch;
            rec.elapsed_seconds = elapsed();
            return rec;
        }
        if (out_of_budget) break;

        EpochMetrics em;
        em.train_loss = loss_sum / static_cast<double>(order.size());
        em.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
        const auto val = train_detail::evaluate(model, fd, req.valid_idx, batch_size);
        em.valid_loss = val.loss;
        em.valid_acc = val.acc;
        rec.epoch_metrics.push_back(em);
        rec.stop_epoch = epoch;

        const double monitored =
            policy.criterion == StopCriterion::validation_loss ? val.loss : val.acc;
        if (tracker.observe(epoch, monitored)) {
            rec.best_epoch = epoch;
            best_params = model.params().snapshot();
        }
        if (tracker.should_stop(epoch)) break;
    }

    if (out_of_budget) {
        rec.status = RunStatus::oor;
        rec.elapsed_seconds = elapsed();
        return rec;
    }
    if (rec.best_epoch == 0) {
        // No epoch ever completed (max_epochs all diverged-free but unscored);
        // treat as diverged-equivalent unusable run.
        rec.status = RunStatus::diverged;
        rec.elapsed_seconds = elapsed();
        return rec;
    }

    model.params().restore(best_params);
    rec.final_valid_score = rec.epoch_metrics[rec.best_epoch - 1].valid_acc;

    if (req.test_idx) {
        const auto test = train_detail::evaluate(model, fd, *req.test_idx, batch_size);
        rec.access_log.push_back({req.set_prefix + "/test", "test", *req.test_idx});
        rec.final_test_score = test.acc;
    }
    rec.status = RunStatus::done;
    rec.elapsed_seconds = elapsed();
    return rec;
}

// Binds a featurized dataset into the TrainFn shape the evaluation protocol
// and the scheduler consume.
inline TrainFn make_neural_trainer(std::shared_ptr<const FeaturizedDataset> fd) {
    return [fd](const TrainRequest& req) { return train_with_early_stopping(*fd, req); };
}

}  // namespace gnnbench
