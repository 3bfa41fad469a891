#pragma once

#include "graphcloak/graph.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace graphcloak {

struct Split {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

struct GraphDataset {
    std::string name;
    std::vector<Graph> graphs;
    int class_count = 0;
    int feature_dim = 0;
    Split split;  // loaders place every index in train until split_dataset is called

    int size() const { return static_cast<int>(graphs.size()); }
};

inline void validate_dataset(const GraphDataset& ds) {
    if (ds.graphs.empty()) throw std::invalid_argument("dataset is empty");
    for (const Graph& g : ds.graphs) {
        validate_graph(g, ds.class_count);
        if (g.feature_dim() != ds.feature_dim)
            throw std::invalid_argument("graph feature dim differs from dataset feature dim");
    }
}

/// Stratified shuffle split. Per class, indices are shuffled with the seeded
/// generator and dealt into test / val / train so every class appears in
/// train whenever it has at least one member. Fractions are by count:
/// floor(test_frac * n_c) to test, floor(val_frac * n_c) to val, rest train.
inline Split split_dataset(const GraphDataset& ds, double train_frac, double val_frac,
                           double test_frac, std::uint64_t seed) {
    if (train_frac <= 0.0 || val_frac < 0.0 || test_frac < 0.0 ||
        std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must be nonnegative and sum to 1");
    std::vector<std::vector<int>> by_class(ds.class_count);
    for (int i = 0; i < ds.size(); ++i) by_class[ds.graphs[i].label].push_back(i);
    Rng rng = make_rng(seed);
    Split s;
    for (auto& members : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        int n = static_cast<int>(members.size());
        int n_test = static_cast<int>(test_frac * n);
        int n_val = static_cast<int>(val_frac * n);
        int i = 0;
        for (; i < n_test; ++i) s.test.push_back(members[i]);
        for (; i < n_test + n_val; ++i) s.val.push_back(members[i]);
        for (; i < n; ++i) s.train.push_back(members[i]);
    }
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

/// New dataset holding copies of the chosen graphs (all indices in train).
inline GraphDataset subset_dataset(const GraphDataset& ds, const std::vector<int>& indices) {
    GraphDataset out;
    out.name = ds.name;
    out.class_count = ds.class_count;
    out.feature_dim = ds.feature_dim;
    for (int i : indices) out.graphs.push_back(ds.graphs[i]);
    out.split.train.resize(out.graphs.size());
    std::iota(out.split.train.begin(), out.split.train.end(), 0);
    return out;
}

/// Summary statistics used for the distributional stealth check.
/// delta_* fields are percent changes relative to `reference` and are only
/// populated when a reference dataset is supplied.
struct DatasetStats {
    double avg_edges = 0.0;    // mean undirected edge count per graph
    double avg_density = 0.0;  // mean of 2|E| / (|V| (|V|-1)); 0 for single-node graphs
    double delta_edges_pct = 0.0;
    double delta_density_pct = 0.0;
};

inline DatasetStats dataset_stats(const GraphDataset& ds, const GraphDataset* reference = nullptr) {
    DatasetStats st;
    for (const Graph& g : ds.graphs) {
        double n = g.node_count();
        double e = static_cast<double>(g.edge_count());
        st.avg_edges += e;
        if (n > 1) st.avg_density += 2.0 * e / (n * (n - 1.0));
    }
    st.avg_edges /= ds.size();
    st.avg_density /= ds.size();
    if (reference) {
        DatasetStats ref = dataset_stats(*reference, nullptr);
        st.delta_edges_pct = 100.0 * (st.avg_edges - ref.avg_edges) / ref.avg_edges;
        st.delta_density_pct = 100.0 * (st.avg_density - ref.avg_density) / ref.avg_density;
    }
    return st;
}

}  // namespace graphcloak
