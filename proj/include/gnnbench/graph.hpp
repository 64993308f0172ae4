#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gnnbench/errors.hpp"

namespace gnnbench {

// One classification sample: an undirected simple graph with an integer
// class label. Node indices are 0-based and local to the graph.
struct Graph {
    int node_count = 0;
    std::vector<std::pair<int, int>> edges;  // unordered pairs, stored (min,max)
    std::optional<std::vector<int>> node_labels;
    std::optional<std::vector<std::vector<double>>> node_attributes;
    int label = 0;

    int degree(int v) const {
        int d = 0;
        for (const auto& [a, b] : edges) d += (a == v) + (b == v);
        return d;
    }

    std::vector<int> degrees() const {
        std::vector<int> d(node_count, 0);
        for (const auto& [a, b] : edges) {
            ++d[a];
            ++d[b];
        }
        return d;
    }
};

struct GraphDataset {
    std::string name;
    std::vector<Graph> graphs;
    int num_classes = 0;
    std::vector<int> class_counts;

    bool has_node_labels() const {
        return !graphs.empty() && graphs.front().node_labels.has_value();
    }
    bool has_node_attributes() const {
        return !graphs.empty() && graphs.front().node_attributes.has_value();
    }
    int attribute_width() const {
        if (!has_node_attributes()) return 0;
        const auto& attrs = *graphs.front().node_attributes;
        return attrs.empty() ? 0 : static_cast<int>(attrs.front().size());
    }
};

struct StatsRecord {
    std::string name;
    int graph_count = 0;
    int class_count = 0;
    double mean_nodes = 0.0;
    double mean_edges = 0.0;  // undirected edges counted once
    int distinct_node_labels = 0;
    bool has_node_labels = false;
    int attribute_width = 0;
};

inline void normalize_edges(Graph& g) {
    for (auto& e : g.edges)
        if (e.first > e.second) std::swap(e.first, e.second);
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
}

// Checks the structural invariants of a finished dataset. Throws on the
// first violation found.
inline void validate_dataset(const GraphDataset& ds) {
    if (static_cast<int>(ds.class_counts.size()) != ds.num_classes)
        throw ValidationError(ds.name + ": class_counts size != num_classes");
    long long total = 0;
    for (int c : ds.class_counts) {
        if (c < 1) throw ValidationError(ds.name + ": empty class");
        total += c;
    }
    if (total != static_cast<long long>(ds.graphs.size()))
        throw ValidationError(ds.name + ": class_counts do not sum to graph count");
    const int attr_width = ds.attribute_width();
    for (std::size_t gi = 0; gi < ds.graphs.size(); ++gi) {
        const Graph& g = ds.graphs[gi];
        const std::string where = ds.name + " graph " + std::to_string(gi);
        if (g.node_count < 1) throw ValidationError(where + ": graph has no nodes");
        if (g.label < 0 || g.label >= ds.num_classes)
            throw ValidationError(where + ": label out of range");
        std::set<std::pair<int, int>> seen;
        for (const auto& [a, b] : g.edges) {
            if (a < 0 || a >= g.node_count || b < 0 || b >= g.node_count)
                throw ValidationError(where + ": edge references unknown node");
            if (a == b) throw ValidationError(where + ": self-loop survived normalization");
            auto key = std::minmax(a, b);
            if (!seen.insert(key).second)
                throw ValidationError(where + ": duplicate undirected edge");
        }
        if (g.node_labels && static_cast<int>(g.node_labels->size()) != g.node_count)
            throw ValidationError(where + ": node_labels length mismatch");
        if (g.node_attributes) {
            if (static_cast<int>(g.node_attributes->size()) != g.node_count)
                throw ValidationError(where + ": node_attributes length mismatch");
            for (const auto& row : *g.node_attributes)
                if (static_cast<int>(row.size()) != attr_width)
                    throw ValidationError(where + ": attribute rows with inconsistent width");
        }
        if (g.node_labels.has_value() != ds.has_node_labels() ||
            g.node_attributes.has_value() != ds.has_node_attributes())
            throw ValidationError(where + ": optional per-node data present on some graphs only");
    }
}

inline StatsRecord dataset_stats(const GraphDataset& ds) {
    if (ds.graphs.empty()) throw ValidationError(ds.name + ": empty dataset");
    StatsRecord s;
    s.name = ds.name;
    s.graph_count = static_cast<int>(ds.graphs.size());
    s.class_count = ds.num_classes;
    long long nodes = 0, edges = 0;
    std::set<int> labels;
    for (const Graph& g : ds.graphs) {
        nodes += g.node_count;
        edges += static_cast<long long>(g.edges.size());
        if (g.node_labels)
            labels.insert(g.node_labels->begin(), g.node_labels->end());
    }
    s.mean_nodes = static_cast<double>(nodes) / s.graph_count;
    s.mean_edges = static_cast<double>(edges) / s.graph_count;
    s.has_node_labels = ds.has_node_labels();
    s.distinct_node_labels = static_cast<int>(labels.size());
    s.attribute_width = ds.attribute_width();
    return s;
}

// Rebuilds class_counts from graph labels; num_classes must already be set.
inline void recount_classes(GraphDataset& ds) {
    ds.class_counts.assign(ds.num_classes, 0);
    for (const Graph& g : ds.graphs) {
        if (g.label < 0 || g.label >= ds.num_classes)
            throw ValidationError(ds.name + ": label out of range");
        ++ds.class_counts[g.label];
    }
}

}  // namespace gnnbench
