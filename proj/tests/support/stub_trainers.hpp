#pragma once

#include <functional>
#include <string>

#include "gnnbench/train.hpp"

namespace testsupport {

// Deterministic stand-in for the neural trainer: logs its accesses honestly
// and reports scores from a caller-supplied function of the request.
inline gnnbench::TrainFn make_stub_trainer(
    std::function<double(const gnnbench::TrainRequest&)> score) {
    return [score](const gnnbench::TrainRequest& req) {
        gnnbench::RunRecord rec;
        rec.config = req.config;
        rec.seeds = req.seeds;
        rec.access_log.push_back({req.set_prefix + "/train", "train", req.train_idx});
        rec.access_log.push_back({req.set_prefix + "/valid", "validate", req.valid_idx});
        rec.stop_epoch = 1;
        rec.best_epoch = 1;
        const double s = score(req);
        rec.epoch_metrics.push_back({0.5, s, 0.5, s});
        rec.final_valid_score = s;
        if (req.test_idx) {
            rec.access_log.push_back({req.set_prefix + "/test", "test", *req.test_idx});
            rec.final_test_score = s;
        }
        return rec;
    };
}

// Extracts the fold number from a set prefix like "fold3/selection/cfg1".
inline int fold_of(const gnnbench::TrainRequest& req) {
    const auto& s = req.set_prefix;
    return std::stoi(s.substr(4, s.find('/') - 4));
}

inline bool is_selection(const gnnbench::TrainRequest& req) {
    return req.set_prefix.find("/selection/") != std::string::npos;
}

inline int config_index_of(const gnnbench::TrainRequest& req) {
    const auto pos = req.set_prefix.find("cfg");
    return pos == std::string::npos ? -1 : std::stoi(req.set_prefix.substr(pos + 3));
}

}  // namespace testsupport
