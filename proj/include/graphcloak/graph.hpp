#pragma once

#include "graphcloak/common.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace graphcloak {

/// One undirected graph: dense symmetric {0,1} adjacency with zero diagonal
/// (self-loops are a model-side concern and are never stored), one-hot node
/// feature rows, and a class label. Graphs are treated as immutable once
/// built; perturbation code constructs new values.
struct Graph {
    Matrix adjacency;  // |V| x |V|
    Matrix features;   // |V| x d, one row per node; d == 0 means "not assigned yet"
    int label = -1;

    int node_count() const { return static_cast<int>(adjacency.rows()); }
    int feature_dim() const { return static_cast<int>(features.cols()); }

    /// Undirected edges, each counted once.
    long edge_count() const {
        double s = adjacency.sum();
        return static_cast<long>(std::llround(s / 2.0));
    }

    bool has_edge(int u, int v) const { return adjacency(u, v) != 0.0; }
};

inline bool is_binary_symmetric_zero_diag(const Matrix& a, double tol = 0.0) {
    if (a.rows() != a.cols()) return false;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (a(i, i) != 0.0) return false;
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            double x = a(i, j);
            if (x != 0.0 && x != 1.0 && std::abs(x) > tol && std::abs(x - 1.0) > tol)
                return false;
            if (a(i, j) != a(j, i)) return false;
        }
    }
    return true;
}

inline bool has_one_hot_rows(const Matrix& x) {
    for (Eigen::Index v = 0; v < x.rows(); ++v) {
        int ones = 0;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (x(v, j) == 1.0) ++ones;
            else if (x(v, j) != 0.0) return false;
        }
        if (ones != 1) return false;
    }
    return true;
}

/// Throws std::invalid_argument if any Graph invariant is violated.
/// Feature checks are skipped while the graph has no feature columns
/// (structure-only graphs, e.g. freshly generated triggers).
inline void validate_graph(const Graph& g, int class_count = -1) {
    if (g.node_count() < 1)
        throw std::invalid_argument("graph must have at least one node");
    if (!is_binary_symmetric_zero_diag(g.adjacency))
        throw std::invalid_argument("adjacency must be symmetric {0,1} with zero diagonal");
    if (g.features.size() > 0) {
        if (g.features.rows() != g.adjacency.rows())
            throw std::invalid_argument("feature row count must match node count");
        if (!has_one_hot_rows(g.features))
            throw std::invalid_argument("feature rows must be one-hot");
    }
    if (class_count >= 0 && (g.label < 0 || g.label >= class_count))
        throw std::invalid_argument("label outside [0, class_count)");
}

/// Index of the 1 in a one-hot row.
inline int feature_class(const Graph& g, int node) {
    for (int j = 0; j < g.feature_dim(); ++j)
        if (g.features(node, j) == 1.0) return j;
    throw std::invalid_argument("row is not one-hot");
}

/// Number of unordered node pairs whose edge state differs. One undirected
/// flip costs 1.
inline long edit_distance(const Graph& a, const Graph& b) {
    if (a.node_count() != b.node_count())
        throw std::invalid_argument("edit_distance: node counts differ");
    long d = 0;
    int n = a.node_count();
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (a.adjacency(u, v) != b.adjacency(u, v)) ++d;
    return d;
}

/// CostFeat: number of nodes whose one-hot feature class differs.
inline int feature_cost(const Graph& a, const Graph& b) {
    if (a.node_count() != b.node_count() || a.feature_dim() != b.feature_dim())
        throw std::invalid_argument("feature_cost: shapes differ");
    int c = 0;
    for (int v = 0; v < a.node_count(); ++v)
        if (a.features.row(v) != b.features.row(v)) ++c;
    return c;
}

/// Combined structural + feature change count (trigger-injection accounting:
/// one undirected flip costs 1, one changed feature row costs 1).
inline long combined_cost(const Graph& a, const Graph& b) {
    return edit_distance(a, b) + feature_cost(a, b);
}

/// Relabels nodes: new node i is old node perm[i].
inline Graph permute_graph(const Graph& g, std::span<const int> perm) {
    int n = g.node_count();
    if (static_cast<int>(perm.size()) != n)
        throw std::invalid_argument("permutation size mismatch");
    Graph out;
    out.label = g.label;
    out.adjacency = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.adjacency(i, j) = g.adjacency(perm[i], perm[j]);
    if (g.features.size() > 0) {
        out.features = Matrix::Zero(n, g.feature_dim());
        for (int i = 0; i < n; ++i) out.features.row(i) = g.features.row(perm[i]);
    }
    return out;
}

}  // namespace graphcloak
