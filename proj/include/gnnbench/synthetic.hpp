#pragma once

#include <string>
#include <vector>

#include "gnnbench/graph.hpp"
#include "gnnbench/rng.hpp"

namespace gnnbench {

namespace synth_detail {

// Random tree over n nodes; each new node attaches to a uniformly chosen
// earlier node whose degree is still below the cap.
inline Graph random_tree(int n, Rng& rng, int max_degree = 1 << 20) {
    Graph g;
    g.node_count = n;
    std::vector<int> deg(n, 0);
    for (int v = 1; v < n; ++v) {
        std::vector<int> candidates;
        for (int u = 0; u < v; ++u)
            if (deg[u] < max_degree) candidates.push_back(u);
        const int parent = candidates[rng.uniform_int(candidates.size())];
        g.edges.emplace_back(parent, v);
        ++deg[parent];
        ++deg[v];
    }
    return g;
}

// Three extra nodes wired as a triangle (closed) or a path (open), hung off
// `attach_to` by a connector edge.
inline void append_triad(Graph& g, bool closed, int attach_to) {
    const int base = g.node_count;
    g.node_count += 3;
    g.edges.emplace_back(base, base + 1);
    g.edges.emplace_back(base + 1, base + 2);
    if (closed) g.edges.emplace_back(base, base + 2);
    g.edges.emplace_back(attach_to, base);
}

inline void shuffle_graphs(GraphDataset& ds, Rng& rng) {
    rng.shuffle(ds.graphs);
}

}  // namespace synth_detail

// Binary task whose label is a structural property: does the graph contain a
// triangle? Every graph is a random-tree backbone with q three-node motifs
// attached; class 1 motifs are closed into triangles, class 0 motifs stay
// open paths. Node counts are identically distributed across classes, so a
// structure-blind model sees nothing, while the closing edges leave degree
// and cycle statistics any message passer can pick up. Nodes carry no labels
// or attributes.
inline GraphDataset make_triangle_task(int n_graphs, std::uint64_t seed,
                                       const std::string& name = "synth-triangle") {
    GraphDataset ds;
    ds.name = name;
    Rng rng(seed_mix({seed, fnv1a64("triangle-task")}));
    for (int i = 0; i < n_graphs; ++i) {
        const int cls = i % 2;
        const int n = 24 + static_cast<int>(rng.uniform_int(7));  // 24..30
        const int q = 2 + static_cast<int>(rng.uniform_int(2));   // 2..3 motifs
        const int backbone = n - q * 3;
        Graph g = synth_detail::random_tree(backbone, rng);
        for (int m = 0; m < q; ++m) {
            const int attach = static_cast<int>(rng.uniform_int(backbone));
            synth_detail::append_triad(g, cls == 1, attach);
        }
        g.label = cls;
        normalize_edges(g);
        ds.graphs.push_back(std::move(g));
    }
    synth_detail::shuffle_graphs(ds, rng);
    ds.num_classes = 2;
    recount_classes(ds);
    validate_dataset(ds);
    return ds;
}

// Binary task whose label depends only on node-label counts: class 1 graphs
// have more label-1 than label-2 nodes (margin >= 2), class 0 the reverse.
// Topology is an independent random tree, so structure carries nothing.
// An optional noise fraction flips labels to keep accuracies away from 1.
inline GraphDataset make_feature_count_task(int n_graphs, std::uint64_t seed,
                                            double label_noise = 0.0,
                                            const std::string& name = "synth-counts") {
    GraphDataset ds;
    ds.name = name;
    Rng rng(seed_mix({seed, fnv1a64("feature-count-task")}));
    for (int i = 0; i < n_graphs; ++i) {
        const int cls = i % 2;
        const int n = 15 + static_cast<int>(rng.uniform_int(11));  // 15..25
        const int lo = 2 + static_cast<int>(rng.uniform_int(4));   // 2..5
        const int hi = lo + 2 + static_cast<int>(rng.uniform_int(3));
        const int count1 = cls == 1 ? hi : lo;
        const int count2 = cls == 1 ? lo : hi;
        Graph g = synth_detail::random_tree(n, rng);
        std::vector<int> labels(n, 0);
        for (int v = 0; v < count1; ++v) labels[v] = 1;
        for (int v = count1; v < count1 + count2; ++v) labels[v] = 2;
        rng.shuffle(labels);
        g.node_labels = std::move(labels);
        g.label = rng.uniform() < label_noise ? 1 - cls : cls;
        normalize_edges(g);
        ds.graphs.push_back(std::move(g));
    }
    synth_detail::shuffle_graphs(ds, rng);
    ds.num_classes = 2;
    recount_classes(ds);
    validate_dataset(ds);
    return ds;
}

// Social-style binary task with degree-dependent labels: class 1 graphs
// contain a hub of degree >= 9, class 0 graphs are trees with all degrees
// capped at 5. Node counts are class-independent and nodes are featureless.
inline GraphDataset make_degree_task(int n_graphs, std::uint64_t seed,
                                     const std::string& name = "synth-degree") {
    GraphDataset ds;
    ds.name = name;
    Rng rng(seed_mix({seed, fnv1a64("degree-task")}));
    for (int i = 0; i < n_graphs; ++i) {
        const int cls = i % 2;
        const int n = 20 + static_cast<int>(rng.uniform_int(7));  // 20..26
        Graph g = synth_detail::random_tree(n, rng, 5);
        if (cls == 1) {
            const int hub = static_cast<int>(rng.uniform_int(n));
            const int target = 9 + static_cast<int>(rng.uniform_int(2));
            std::vector<bool> adjacent(n, false);
            adjacent[hub] = true;
            for (const auto& [a, b] : g.edges) {
                if (a == hub) adjacent[b] = true;
                if (b == hub) adjacent[a] = true;
            }
            int deg = g.degree(hub);
            while (deg < target) {
                const int v = static_cast<int>(rng.uniform_int(n));
                if (adjacent[v]) continue;
                adjacent[v] = true;
                g.edges.emplace_back(hub, v);
                ++deg;
            }
        }
        g.label = cls;
        normalize_edges(g);
        ds.graphs.push_back(std::move(g));
    }
    synth_detail::shuffle_graphs(ds, rng);
    ds.num_classes = 2;
    recount_classes(ds);
    validate_dataset(ds);
    return ds;
}

}  // namespace gnnbench
