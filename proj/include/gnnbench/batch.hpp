#pragma once

#include <span>
#include <vector>

#include "gnnbench/features.hpp"
#include "gnnbench/tensor.hpp"

namespace gnnbench {

// Disjoint union of a set of graphs: stacked node features, global-index
// adjacency lists, and a node -> batch-position map for pooling.
struct GraphBatch {
    Tensor2 x;
    std::vector<std::vector<int>> adj;
    std::vector<int> graph_index;
    std::vector<int> labels;
    int num_graphs = 0;
};

inline GraphBatch make_batch(const FeaturizedDataset& fd, std::span<const int> graph_ids) {
    if (graph_ids.empty()) throw ValidationError("make_batch: empty batch");
    int total_nodes = 0;
    for (int gid : graph_ids) {
        if (gid < 0 || gid >= fd.num_graphs())
            throw ValidationError("make_batch: graph id out of range");
        const Graph& g = fd.dataset.graphs[gid];
        if (g.node_count < 1) throw ValidationError("make_batch: empty graph in batch");
        total_nodes += g.node_count;
    }

    GraphBatch b;
    b.num_graphs = static_cast<int>(graph_ids.size());
    b.x = Tensor2(total_nodes, fd.width);
    b.adj.resize(total_nodes);
    b.graph_index.resize(total_nodes);
    b.labels.reserve(graph_ids.size());

    int base = 0;
    int pos = 0;
    for (int gid : graph_ids) {
        const Graph& g = fd.dataset.graphs[gid];
        const Tensor2& feats = fd.features[gid];
        for (int v = 0; v < g.node_count; ++v) {
            for (int j = 0; j < fd.width; ++j) b.x.at(base + v, j) = feats.at(v, j);
            b.graph_index[base + v] = pos;
        }
        for (const auto& [u, v] : g.edges) {
            b.adj[base + u].push_back(base + v);
            b.adj[base + v].push_back(base + u);
        }
        b.labels.push_back(g.label);
        base += g.node_count;
        ++pos;
    }
    return b;
}

}  // namespace gnnbench
