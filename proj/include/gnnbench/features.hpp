#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "gnnbench/graph.hpp"
#include "gnnbench/tensor.hpp"

namespace gnnbench {

// The input-representation regimes: one-hot node labels for chemical data,
// a constant or the node degree for featureless social graphs, raw attribute
// vectors, or attributes concatenated with the label one-hot.
enum class FeatureMode {
    one_hot_label,
    uninformative,
    degree,
    degree_one_hot,
    attributes,
    attributes_plus_label,
};

struct FeatureSpec {
    FeatureMode mode = FeatureMode::uninformative;
    int max_degree = 0;           // degree_one_hot only
    bool normalize_degree = false;  // scale scalar degree by the dataset max
};

inline std::string to_string(FeatureMode m) {
    switch (m) {
        case FeatureMode::one_hot_label: return "one_hot_label";
        case FeatureMode::uninformative: return "uninformative";
        case FeatureMode::degree: return "degree";
        case FeatureMode::degree_one_hot: return "degree_one_hot";
        case FeatureMode::attributes: return "attributes";
        case FeatureMode::attributes_plus_label: return "attributes_plus_label";
    }
    return "?";
}

inline FeatureMode feature_mode_from_string(const std::string& s) {
    if (s == "one_hot_label") return FeatureMode::one_hot_label;
    if (s == "uninformative") return FeatureMode::uninformative;
    if (s == "degree") return FeatureMode::degree;
    if (s == "degree_one_hot") return FeatureMode::degree_one_hot;
    if (s == "attributes") return FeatureMode::attributes;
    if (s == "attributes_plus_label") return FeatureMode::attributes_plus_label;
    throw ValidationError("unknown feature mode: " + s);
}

// Dataset plus its per-graph node-feature matrices; the immutable input every
// training run reads from.
struct FeaturizedDataset {
    GraphDataset dataset;
    FeatureSpec spec;
    int width = 0;
    std::vector<Tensor2> features;  // per graph, node_count x width

    int num_graphs() const { return static_cast<int>(dataset.graphs.size()); }
    int num_classes() const { return dataset.num_classes; }
};

namespace feat_detail {

inline std::map<int, int> label_columns(const GraphDataset& ds) {
    std::set<int> distinct;
    for (const Graph& g : ds.graphs)
        if (g.node_labels) distinct.insert(g.node_labels->begin(), g.node_labels->end());
    std::map<int, int> cols;
    int next = 0;
    for (int v : distinct) cols[v] = next++;
    return cols;
}

inline int dataset_max_degree(const GraphDataset& ds) {
    int m = 0;
    for (const Graph& g : ds.graphs)
        for (int d : g.degrees()) m = std::max(m, d);
    return m;
}

}  // namespace feat_detail

inline int derived_width(const GraphDataset& ds, const FeatureSpec& spec) {
    switch (spec.mode) {
        case FeatureMode::one_hot_label:
            return static_cast<int>(feat_detail::label_columns(ds).size());
        case FeatureMode::uninformative:
        case FeatureMode::degree:
            return 1;
        case FeatureMode::degree_one_hot:
            return spec.max_degree + 1;
        case FeatureMode::attributes:
            return ds.attribute_width();
        case FeatureMode::attributes_plus_label:
            return ds.attribute_width() +
                   static_cast<int>(feat_detail::label_columns(ds).size());
    }
    return 0;
}

inline FeaturizedDataset build_features(const GraphDataset& ds, const FeatureSpec& spec) {
    const bool needs_labels = spec.mode == FeatureMode::one_hot_label ||
                              spec.mode == FeatureMode::attributes_plus_label;
    const bool needs_attrs = spec.mode == FeatureMode::attributes ||
                             spec.mode == FeatureMode::attributes_plus_label;
    if (needs_labels && !ds.has_node_labels())
        throw ValidationError(ds.name + ": feature mode " + to_string(spec.mode) +
                              " requires node labels");
    if (needs_attrs && !ds.has_node_attributes())
        throw ValidationError(ds.name + ": feature mode " + to_string(spec.mode) +
                              " requires node attributes");

    FeaturizedDataset out;
    out.dataset = ds;
    out.spec = spec;
    out.width = derived_width(ds, spec);
    if (out.width <= 0) throw ValidationError(ds.name + ": derived feature width is zero");

    const auto label_cols = needs_labels ? feat_detail::label_columns(ds) : std::map<int, int>{};
    const int attr_width = needs_attrs ? ds.attribute_width() : 0;
    const double degree_scale =
        (spec.mode == FeatureMode::degree && spec.normalize_degree)
            ? 1.0 / std::max(1, feat_detail::dataset_max_degree(ds))
            : 1.0;

    out.features.reserve(ds.graphs.size());
    for (const Graph& g : ds.graphs) {
        Tensor2 x(g.node_count, out.width);
        switch (spec.mode) {
            case FeatureMode::uninformative:
                x.fill(1.0);
                break;
            case FeatureMode::degree: {
                const auto degs = g.degrees();
                for (int v = 0; v < g.node_count; ++v) x.at(v, 0) = degs[v] * degree_scale;
                break;
            }
            case FeatureMode::degree_one_hot: {
                const auto degs = g.degrees();
                for (int v = 0; v < g.node_count; ++v) {
                    if (degs[v] > spec.max_degree)
                        throw ValidationError(ds.name + ": observed degree " +
                                              std::to_string(degs[v]) + " exceeds max_degree " +
                                              std::to_string(spec.max_degree));
                    x.at(v, degs[v]) = 1.0;
                }
                break;
            }
            case FeatureMode::one_hot_label:
                for (int v = 0; v < g.node_count; ++v)
                    x.at(v, label_cols.at((*g.node_labels)[v])) = 1.0;
                break;
            case FeatureMode::attributes:
                for (int v = 0; v < g.node_count; ++v)
                    for (int j = 0; j < attr_width; ++j) x.at(v, j) = (*g.node_attributes)[v][j];
                break;
            case FeatureMode::attributes_plus_label:
                for (int v = 0; v < g.node_count; ++v) {
                    for (int j = 0; j < attr_width; ++j) x.at(v, j) = (*g.node_attributes)[v][j];
                    x.at(v, attr_width + label_cols.at((*g.node_labels)[v])) = 1.0;
                }
                break;
        }
        out.features.push_back(std::move(x));
    }
    return out;
}

}  // namespace gnnbench
