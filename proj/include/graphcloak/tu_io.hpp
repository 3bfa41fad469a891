#pragma once

#include "graphcloak/dataset.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace graphcloak {

/// How node features are produced when loading.
///  - NodeLabels: one-hot over the dataset's discrete node labels
///    (requires NAME_node_labels.txt).
///  - DegreeOneHot: one-hot over node degree, used for datasets that ship
///    without node labels. Degrees at or above `degree_cap` share the last
///    column.
enum class FeaturePolicy { NodeLabels, DegreeOneHot };

namespace detail {

inline std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline long parse_int(const std::string& token, const std::string& file) {
    std::string t = trim(token);
    long value = 0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size())
        throw std::runtime_error(file + ": non-integer token '" + t + "'");
    return value;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw std::runtime_error("missing file: " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (!t.empty()) lines.push_back(t);
    }
    return lines;
}

}  // namespace detail

/// Reads a dataset in the TU Dortmund benchmark layout:
///   root/NAME/NAME_A.txt               "u, v" pairs, 1-indexed global node
///                                      ids, both directions listed
///   root/NAME/NAME_graph_indicator.txt graph id (1-indexed) of node i on line i
///   root/NAME/NAME_graph_labels.txt    class of graph i on line i
///   root/NAME/NAME_node_labels.txt     optional, label of node i on line i
/// Graph and node labels are remapped to contiguous 0-based ids in sorted
/// order of the raw values. All graph indices land in split.train.
inline GraphDataset load_tu_dataset(const std::filesystem::path& root, const std::string& name,
                                    FeaturePolicy policy = FeaturePolicy::NodeLabels,
                                    int degree_cap = 64) {
    namespace fs = std::filesystem;
    fs::path dir = root / name;
    auto file = [&](const char* suffix) { return dir / (name + suffix); };

    auto indicator_lines = detail::read_lines(file("_graph_indicator.txt"));
    auto label_lines = detail::read_lines(file("_graph_labels.txt"));
    auto edge_lines = detail::read_lines(file("_A.txt"));

    int node_total = static_cast<int>(indicator_lines.size());
    int graph_total = static_cast<int>(label_lines.size());
    if (graph_total == 0) throw std::runtime_error("graph label file is empty");

    // global node id (0-based) -> (graph, local node id)
    std::vector<int> node_graph(node_total), node_local(node_total);
    std::vector<int> graph_size(graph_total, 0);
    for (int i = 0; i < node_total; ++i) {
        long gid = detail::parse_int(indicator_lines[i], "graph_indicator");
        if (gid < 1 || gid > graph_total)
            throw std::runtime_error("graph_indicator: graph id out of range");
        node_graph[i] = static_cast<int>(gid - 1);
        node_local[i] = graph_size[node_graph[i]]++;
    }

    GraphDataset ds;
    ds.name = name;
    ds.graphs.resize(graph_total);
    for (int g = 0; g < graph_total; ++g) {
        if (graph_size[g] == 0) throw std::runtime_error("graph with no nodes in indicator file");
        ds.graphs[g].adjacency = Matrix::Zero(graph_size[g], graph_size[g]);
    }

    for (const std::string& line : edge_lines) {
        size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("_A.txt: expected 'u, v' but got '" + line + "'");
        long u = detail::parse_int(line.substr(0, comma), "_A.txt");
        long v = detail::parse_int(line.substr(comma + 1), "_A.txt");
        if (u < 1 || u > node_total || v < 1 || v > node_total)
            throw std::runtime_error("_A.txt: node id outside dataset");
        int ui = static_cast<int>(u - 1), vi = static_cast<int>(v - 1);
        if (node_graph[ui] != node_graph[vi])
            throw std::runtime_error("_A.txt: edge endpoints belong to different graphs");
        if (ui == vi) throw std::runtime_error("_A.txt: self-loop");
        Matrix& a = ds.graphs[node_graph[ui]].adjacency;
        a(node_local[ui], node_local[vi]) = 1.0;
        a(node_local[vi], node_local[ui]) = 1.0;
    }

    {
        std::map<long, int> remap;
        std::vector<long> raw(graph_total);
        for (int g = 0; g < graph_total; ++g) {
            raw[g] = detail::parse_int(label_lines[g], "graph_labels");
            remap[raw[g]] = 0;
        }
        int next = 0;
        for (auto& [k, v] : remap) v = next++;
        ds.class_count = next;
        for (int g = 0; g < graph_total; ++g) ds.graphs[g].label = remap[raw[g]];
    }

    if (policy == FeaturePolicy::NodeLabels) {
        auto node_label_lines = detail::read_lines(file("_node_labels.txt"));
        if (static_cast<int>(node_label_lines.size()) != node_total)
            throw std::runtime_error("_node_labels.txt: line count differs from indicator file");
        std::map<long, int> remap;
        std::vector<long> raw(node_total);
        for (int i = 0; i < node_total; ++i) {
            raw[i] = detail::parse_int(node_label_lines[i], "_node_labels.txt");
            remap[raw[i]] = 0;
        }
        int next = 0;
        for (auto& [k, v] : remap) v = next++;
        ds.feature_dim = next;
        for (Graph& g : ds.graphs) g.features = Matrix::Zero(g.node_count(), ds.feature_dim);
        for (int i = 0; i < node_total; ++i)
            ds.graphs[node_graph[i]].features(node_local[i], remap[raw[i]]) = 1.0;
    } else {
        int max_degree = 0;
        for (const Graph& g : ds.graphs)
            for (int v = 0; v < g.node_count(); ++v)
                max_degree = std::max(max_degree, static_cast<int>(g.adjacency.row(v).sum()));
        ds.feature_dim = std::min(max_degree + 1, degree_cap);
        for (Graph& g : ds.graphs) {
            g.features = Matrix::Zero(g.node_count(), ds.feature_dim);
            for (int v = 0; v < g.node_count(); ++v) {
                int d = static_cast<int>(g.adjacency.row(v).sum());
                g.features(v, std::min(d, ds.feature_dim - 1)) = 1.0;
            }
        }
    }

    ds.split.train.resize(graph_total);
    std::iota(ds.split.train.begin(), ds.split.train.end(), 0);
    validate_dataset(ds);
    return ds;
}

/// Writes the TU layout under root/NAME/. Both directions of every edge are
/// emitted in row-major scan order of each graph's adjacency. When
/// `write_node_labels` is set, the one-hot column index of each node is
/// written as its label; loading that back with FeaturePolicy::NodeLabels
/// reproduces the features exactly (classes absent from the written data
/// collapse, so the dimension can shrink).
inline void save_tu_dataset(const GraphDataset& ds, const std::filesystem::path& root,
                            bool write_node_labels = true) {
    namespace fs = std::filesystem;
    fs::path dir = root / ds.name;
    fs::create_directories(dir);
    auto open = [&](const char* suffix) {
        std::ofstream out(dir / (ds.name + suffix));
        if (!out) throw std::runtime_error("cannot write " + (dir / (ds.name + suffix)).string());
        return out;
    };

    std::ofstream fa = open("_A.txt");
    std::ofstream fi = open("_graph_indicator.txt");
    std::ofstream fl = open("_graph_labels.txt");
    long base = 0;  // global id offset of the current graph's node 0
    for (int g = 0; g < ds.size(); ++g) {
        const Graph& graph = ds.graphs[g];
        int n = graph.node_count();
        for (int u = 0; u < n; ++u) {
            fi << (g + 1) << "\n";
            for (int v = 0; v < n; ++v)
                if (graph.adjacency(u, v) != 0.0) fa << (base + u + 1) << ", " << (base + v + 1) << "\n";
        }
        fl << graph.label << "\n";
        base += n;
    }

    if (write_node_labels && ds.feature_dim > 0) {
        std::ofstream fn = open("_node_labels.txt");
        for (const Graph& graph : ds.graphs)
            for (int v = 0; v < graph.node_count(); ++v) {
                int cls = 0;
                for (int j = 0; j < ds.feature_dim; ++j)
                    if (graph.features(v, j) == 1.0) cls = j;
                fn << cls << "\n";
            }
    }
}

}  // namespace graphcloak
