#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "gnnbench/graph.hpp"

namespace gnnbench {

// Normalization counters reported by the TU parser: raw files carry directed
// duplicate pairs and occasionally self-loops, both folded away here.
struct TuParseNotes {
    long long directed_pairs_merged = 0;
    long long self_loops_dropped = 0;
};

namespace tu_detail {

inline std::string trim(std::string s) {
    const char* ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline long long parse_int(const std::string& tok, const std::string& where) {
    long long value = 0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ValidationError(where + ": non-integer label token '" + tok + "'");
    return value;
}

inline double parse_real(const std::string& tok, const std::string& where) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        while (used < tok.size() && std::isspace(static_cast<unsigned char>(tok[used]))) ++used;
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(where + ": malformed real token '" + tok + "'");
    }
}

// Reads all lines, dropping trailing blank lines only. A blank line in the
// middle of a file is a format error surfaced later as a count mismatch.
inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ValidationError("missing mandatory file: " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

}  // namespace tu_detail

// Parses a TU-Dortmund-format dataset directory: NAME_A.txt (directed edge
// pairs, 1-indexed global node ids), NAME_graph_indicator.txt,
// NAME_graph_labels.txt, plus optional NAME_node_labels.txt and
// NAME_node_attributes.txt. Node indices come out 0-based per graph, graph
// labels remapped to [0, C) preserving sorted original order, and reciprocal
// or duplicate edge pairs merged into one undirected edge.
inline GraphDataset parse_tu_dataset(const std::filesystem::path& root_dir,
                                     const std::string& name,
                                     TuParseNotes* notes = nullptr) {
    namespace fs = std::filesystem;
    using namespace tu_detail;
    const fs::path base = root_dir / name;
    const auto file = [&](const char* suffix) { return base / (name + suffix); };

    const auto indicator_lines = read_lines(file("_graph_indicator.txt"));
    const auto label_lines = read_lines(file("_graph_labels.txt"));
    const auto edge_lines = read_lines(file("_A.txt"));

    const int node_total = static_cast<int>(indicator_lines.size());
    const int graph_total = static_cast<int>(label_lines.size());
    if (graph_total == 0) throw ValidationError(name + ": no graphs declared");

    // Global node id -> (graph id, local 0-based index). Globals are 1-indexed
    // and assigned to graphs in file order.
    std::vector<int> node_graph(node_total);
    std::vector<int> node_local(node_total);
    std::vector<int> graph_sizes(graph_total, 0);
    for (int n = 0; n < node_total; ++n) {
        const long long gid =
            parse_int(trim(indicator_lines[n]), name + "_graph_indicator line " + std::to_string(n + 1));
        if (gid < 1 || gid > graph_total)
            throw ValidationError(name + ": node " + std::to_string(n + 1) +
                                  " assigned to no graph (indicator " + std::to_string(gid) + ")");
        node_graph[n] = static_cast<int>(gid - 1);
        node_local[n] = graph_sizes[node_graph[n]]++;
    }

    GraphDataset ds;
    ds.name = name;
    ds.graphs.resize(graph_total);
    for (int g = 0; g < graph_total; ++g) {
        if (graph_sizes[g] == 0)
            throw ValidationError(name + ": graph " + std::to_string(g + 1) + " has no nodes");
        ds.graphs[g].node_count = graph_sizes[g];
    }

    TuParseNotes local_notes;
    for (std::size_t i = 0; i < edge_lines.size(); ++i) {
        const std::string where = name + "_A line " + std::to_string(i + 1);
        const auto toks = split_commas(edge_lines[i]);
        if (toks.size() != 2) throw ValidationError(where + ": expected 'i, j'");
        const long long u = parse_int(toks[0], where);
        const long long v = parse_int(toks[1], where);
        if (u < 1 || u > node_total || v < 1 || v > node_total)
            throw ValidationError(where + ": edge references unknown node");
        const int gu = node_graph[u - 1], gv = node_graph[v - 1];
        if (gu != gv) throw ValidationError(where + ": edge endpoints in different graphs");
        if (u == v) {
            ++local_notes.self_loops_dropped;
            continue;
        }
        ds.graphs[gu].edges.emplace_back(node_local[u - 1], node_local[v - 1]);
    }
    for (Graph& g : ds.graphs) {
        const auto raw = static_cast<long long>(g.edges.size());
        normalize_edges(g);
        local_notes.directed_pairs_merged += raw - static_cast<long long>(g.edges.size());
    }

    // Graph labels: remap distinct originals to [0, C) by sorted value.
    std::vector<long long> raw_labels(graph_total);
    std::map<long long, int> label_map;
    for (int g = 0; g < graph_total; ++g) {
        raw_labels[g] = parse_int(trim(label_lines[g]),
                                  name + "_graph_labels line " + std::to_string(g + 1));
        label_map.emplace(raw_labels[g], 0);
    }
    int next = 0;
    for (auto& [raw, mapped] : label_map) mapped = next++;
    ds.num_classes = next;
    for (int g = 0; g < graph_total; ++g) ds.graphs[g].label = label_map.at(raw_labels[g]);

    if (fs::exists(file("_node_labels.txt"))) {
        const auto lines = read_lines(file("_node_labels.txt"));
        if (static_cast<int>(lines.size()) != node_total)
            throw ValidationError(name + "_node_labels: expected " + std::to_string(node_total) +
                                  " lines, found " + std::to_string(lines.size()));
        for (Graph& g : ds.graphs) g.node_labels.emplace(g.node_count, 0);
        for (int n = 0; n < node_total; ++n) {
            const long long lab =
                parse_int(trim(lines[n]), name + "_node_labels line " + std::to_string(n + 1));
            (*ds.graphs[node_graph[n]].node_labels)[node_local[n]] = static_cast<int>(lab);
        }
    }

    if (fs::exists(file("_node_attributes.txt"))) {
        const auto lines = read_lines(file("_node_attributes.txt"));
        if (static_cast<int>(lines.size()) != node_total)
            throw ValidationError(name + "_node_attributes: expected " + std::to_string(node_total) +
                                  " lines, found " + std::to_string(lines.size()));
        for (Graph& g : ds.graphs)
            g.node_attributes.emplace(g.node_count, std::vector<double>{});
        std::size_t width = 0;
        for (int n = 0; n < node_total; ++n) {
            const std::string where = name + "_node_attributes line " + std::to_string(n + 1);
            const auto toks = split_commas(lines[n]);
            std::vector<double> row;
            row.reserve(toks.size());
            for (const auto& t : toks) row.push_back(parse_real(t, where));
            if (n == 0) width = row.size();
            if (row.size() != width)
                throw ValidationError(where + ": attribute rows with inconsistent width");
            (*ds.graphs[node_graph[n]].node_attributes)[node_local[n]] = std::move(row);
        }
    }

    recount_classes(ds);
    validate_dataset(ds);
    if (notes) *notes = local_notes;
    return ds;
}

}  // namespace gnnbench
