#pragma once

#include "graphcloak/graph.hpp"

namespace graphcloak {

/// Erdos-Renyi G(n, p): every unordered pair gets an edge independently with
/// probability `density`. Pairs are visited in row-major (u < v) order so a
/// fixed seed always yields the same graph. Structure only; no features.
inline Graph erdos_renyi(int n, double density, Rng& rng) {
    if (n < 1) throw std::invalid_argument("erdos_renyi: n must be >= 1");
    if (density < 0.0 || density > 1.0)
        throw std::invalid_argument("erdos_renyi: density outside [0,1]");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Graph g;
    g.adjacency = Matrix::Zero(n, n);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v)
            if (unit(rng) < density) {
                g.adjacency(u, v) = 1.0;
                g.adjacency(v, u) = 1.0;
            }
    return g;
}

/// One-hot rows drawn uniformly over `dim` classes, one per node.
inline Matrix random_one_hot(int n, int dim, Rng& rng) {
    if (dim < 1) throw std::invalid_argument("random_one_hot: dim must be >= 1");
    std::uniform_int_distribution<int> pick(0, dim - 1);
    Matrix x = Matrix::Zero(n, dim);
    for (int v = 0; v < n; ++v) x(v, pick(rng)) = 1.0;
    return x;
}

}  // namespace graphcloak
