#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "gnnbench/graph.hpp"

namespace gnnbench {

inline constexpr const char* kDatasetFormat = "gnnbench.dataset.v1";

inline nlohmann::json dataset_to_json(const GraphDataset& ds) {
    nlohmann::json j;
    j["format"] = kDatasetFormat;
    j["name"] = ds.name;
    j["num_classes"] = ds.num_classes;
    nlohmann::json graphs = nlohmann::json::array();
    for (const Graph& g : ds.graphs) {
        nlohmann::json jg;
        jg["n"] = g.node_count;
        jg["label"] = g.label;
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [a, b] : g.edges) edges.push_back({a, b});
        jg["edges"] = std::move(edges);
        if (g.node_labels) jg["node_labels"] = *g.node_labels;
        if (g.node_attributes) jg["node_attributes"] = *g.node_attributes;
        graphs.push_back(std::move(jg));
    }
    j["graphs"] = std::move(graphs);
    return j;
}

inline GraphDataset dataset_from_json(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", "") != kDatasetFormat)
        throw ValidationError("dataset json: missing or unknown format tag");
    GraphDataset ds;
    try {
        ds.name = j.at("name").get<std::string>();
        ds.num_classes = j.at("num_classes").get<int>();
        for (const auto& jg : j.at("graphs")) {
            Graph g;
            g.node_count = jg.at("n").get<int>();
            g.label = jg.at("label").get<int>();
            for (const auto& je : jg.at("edges"))
                g.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
            if (jg.contains("node_labels"))
                g.node_labels = jg.at("node_labels").get<std::vector<int>>();
            if (jg.contains("node_attributes"))
                g.node_attributes =
                    jg.at("node_attributes").get<std::vector<std::vector<double>>>();
            ds.graphs.push_back(std::move(g));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dataset json: ") + e.what());
    }
    recount_classes(ds);
    validate_dataset(ds);
    return ds;
}

inline void save_dataset(const GraphDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << dataset_to_json(ds).dump(2) << '\n';
}

inline GraphDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return dataset_from_json(j);
}

}  // namespace gnnbench
