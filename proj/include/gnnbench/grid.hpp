#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gnnbench/models.hpp"

namespace gnnbench {

// One axis of the search space, e.g. {"learning_rate", [1e-1, 1e-3, 1e-6]}.
// Axis order is declaration order and fixes both the Cartesian product order
// and the selection tie-break.
struct GridAxis {
    std::string name;
    std::vector<nlohmann::json> values;
};

struct HyperGrid {
    std::vector<GridAxis> axes;

    std::size_t size() const {
        std::size_t n = 1;
        for (const auto& a : axes) n *= a.values.size();
        return n;
    }
};

// Axes parsed in file order; requires an order-preserving json document.
inline HyperGrid grid_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw ValidationError("grid: expected an object of axes");
    HyperGrid g;
    for (const auto& [name, values] : j.items()) {
        if (!values.is_array() || values.empty())
            throw ValidationError("grid axis '" + name + "' must be a non-empty array");
        GridAxis axis;
        axis.name = name;
        for (const auto& v : values) axis.values.push_back(v);
        g.axes.push_back(std::move(axis));
    }
    if (g.axes.empty()) throw ValidationError("grid: no axes declared");
    return g;
}

inline nlohmann::ordered_json grid_to_json(const HyperGrid& g) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& a : g.axes) {
        nlohmann::ordered_json vals = nlohmann::ordered_json::array();
        for (const auto& v : a.values) vals.push_back(nlohmann::ordered_json(v));
        j[a.name] = std::move(vals);
    }
    return j;
}

namespace grid_detail {

inline void apply_axis(ModelConfig& c, const std::string& name, const nlohmann::json& v) {
    try {
        if (name == "layers") c.layers = v.get<int>();
        else if (name == "hidden_units") c.hidden_units = v.get<int>();
        else if (name == "learning_rate") c.learning_rate = v.get<double>();
        else if (name == "batch_size") c.batch_size = v.get<int>();
        else if (name == "l2") c.l2 = v.get<double>();
        else if (name == "dropout") c.dropout = v.get<double>();
        else if (name == "aggregation") c.aggregation = aggregation_from_string(v.get<std::string>());
        else if (name == "epsilon_trainable") c.epsilon_trainable = v.get<bool>();
        else if (name == "stop_criterion")
            c.stop_criterion = stop_criterion_from_string(v.get<std::string>());
        else if (name == "max_epochs") c.max_epochs = v.get<int>();
        else if (name == "optimizer")
            c.optimizer = v.get<std::string>() == "sgd" ? OptimKind::sgd : OptimKind::adam;
        else if (name == "momentum") c.momentum = v.get<double>();
        else if (name == "scheduler")
            c.scheduler = v.get<std::string>() == "step_lr" ? SchedKind::step_lr : SchedKind::none;
        else if (name == "sched_step") c.sched_step = v.get<int>();
        else if (name == "sched_gamma") c.sched_gamma = v.get<double>();
        else throw ValidationError("grid: unknown axis '" + name + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("grid axis '" + name + "': " + e.what());
    }
}

}  // namespace grid_detail

// Cartesian product in declared axis order, first axis slowest. Config i can
// be reproduced from i alone, which is what makes job ids stable.
inline std::vector<ModelConfig> expand_grid(ModelKind kind, const HyperGrid& grid) {
    for (const auto& a : grid.axes) {
        if (a.values.empty()) throw ValidationError("grid axis '" + a.name + "' is empty");
        if (a.name == "aggregation" && kind != ModelKind::graphsage)
            throw ValidationError("grid: aggregation axis applies to graphsage only");
    }
    std::vector<ModelConfig> out;
    const std::size_t total = grid.size();
    out.reserve(total);
    for (std::size_t i = 0; i < total; ++i) {
        ModelConfig c;
        c.kind = kind;
        std::size_t rest = i;
        // decode mixed-radix digits, last axis fastest
        std::vector<std::size_t> digit(grid.axes.size());
        for (std::size_t a = grid.axes.size(); a-- > 0;) {
            digit[a] = rest % grid.axes[a].values.size();
            rest /= grid.axes[a].values.size();
        }
        for (std::size_t a = 0; a < grid.axes.size(); ++a)
            grid_detail::apply_axis(c, grid.axes[a].name, grid.axes[a].values[digit[a]]);
        validate_model_config(c);
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace gnnbench
