#pragma once

#include "graphcloak/random_graph.hpp"
#include "graphcloak/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace graphcloak {

/// Adaptive per-graph budget c = floor(min(|E|/10, beta |V|^2)), clamped to
/// at least 1 so small sparse graphs still receive protection.
inline long compute_budget(const Graph& g, double beta) {
    double n = static_cast<double>(g.node_count());
    double raw = std::min(static_cast<double>(g.edge_count()) / 10.0, beta * n * n);
    return std::max(1L, static_cast<long>(std::floor(raw)));
}

/// Largest n with n(n-1) + 2n <= c, i.e. floor((-1 + sqrt(1+4c)) / 2).
/// The left side is the trigger's worst-case cost in the doubled accounting
/// (both directions of each edge plus 2 per rewritten one-hot row), so the
/// single-counted cost of an n-node trigger is at most c/2.
inline long trigger_node_count_raw(double c) {
    if (c < 0.0) throw std::invalid_argument("budget must be non-negative");
    long n = static_cast<long>(std::floor((-1.0 + std::sqrt(1.0 + 4.0 * c)) / 2.0));
    while (n * (n - 1) + 2 * n > static_cast<long>(c)) --n;  // guard fp rounding
    return std::max(0L, n);
}

inline long trigger_node_count(double c) { return std::max(1L, trigger_node_count_raw(c)); }

enum class CloakMethod { EMinS, EMinF, SubInj, Random, EMaxS };

inline const char* method_name(CloakMethod m) {
    switch (m) {
        case CloakMethod::EMinS: return "emins";
        case CloakMethod::EMinF: return "eminf";
        case CloakMethod::SubInj: return "subinj";
        case CloakMethod::Random: return "random";
        case CloakMethod::EMaxS: return "emaxs";
    }
    throw std::logic_error("unknown cloak method");
}

inline CloakMethod method_from_name(const std::string& s) {
    if (s == "emins") return CloakMethod::EMinS;
    if (s == "eminf") return CloakMethod::EMinF;
    if (s == "subinj") return CloakMethod::SubInj;
    if (s == "random") return CloakMethod::Random;
    if (s == "emaxs") return CloakMethod::EMaxS;
    throw std::invalid_argument("unknown cloak method '" + s + "'");
}

struct PgdConfig {
    double alpha = 0.025;     // signed-gradient step size
    int steps = 4;            // S
    double temperature = 5.0; // softmax sampling temperature (multiplies logits)
};

struct CloakJob {
    CloakMethod method = CloakMethod::EMinS;
    Arch surrogate_arch = Arch::GCN;
    TrainConfig surrogate_train;  // lr / weight decay / batch size for the surrogate
    int n_steps = 5000;
    PgdConfig pgd;
    double beta = 0.05;
    double poison_rate = 1.0;
    double trigger_density = 0.6;
    int trigger_max_nodes = 5;
    bool exact_rerank = false;  // re-rank candidate flips after every applied flip
    bool final_pass = false;    // one extra perturbation sweep with the final surrogate
    std::uint64_t seed = 0;

    void validate() const {
        if (poison_rate < 0.0 || poison_rate > 1.0)
            throw std::invalid_argument("poison_rate outside [0,1]");
        if (n_steps < 0) throw std::invalid_argument("n_steps must be non-negative");
        if (beta <= 0.0) throw std::invalid_argument("beta must be positive");
        if (trigger_density < 0.0 || trigger_density > 1.0)
            throw std::invalid_argument("trigger density outside [0,1]");
        if (pgd.alpha <= 0.0 || pgd.steps < 0 || pgd.temperature <= 0.0)
            throw std::invalid_argument("bad PGD config");
    }
};

/// Seeded stratified choice of exactly floor(p * |train|) train indices.
/// Per-class quotas are proportional with largest-remainder rounding, so the
/// poisoned set mirrors the class balance of the train split.
inline std::vector<int> select_poisoned(const GraphDataset& ds, double poison_rate,
                                        std::uint64_t seed) {
    const std::vector<int>& train = ds.split.train;
    int target = static_cast<int>(poison_rate * train.size());
    if (target <= 0) return {};
    std::vector<std::vector<int>> by_class(ds.class_count);
    for (int i : train) by_class[ds.graphs[i].label].push_back(i);

    std::vector<int> quota(ds.class_count, 0);
    std::vector<std::pair<double, int>> remainder;
    int assigned = 0;
    for (int k = 0; k < ds.class_count; ++k) {
        double exact = poison_rate * by_class[k].size();
        quota[k] = static_cast<int>(exact);
        assigned += quota[k];
        remainder.push_back({exact - quota[k], k});
    }
    std::sort(remainder.begin(), remainder.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (int r = 0; r < target - assigned; ++r) ++quota[remainder[r].second];

    Rng rng = make_rng(seed);
    std::vector<int> chosen;
    for (int k = 0; k < ds.class_count; ++k) {
        std::shuffle(by_class[k].begin(), by_class[k].end(), rng);
        for (int j = 0; j < quota[k] && j < static_cast<int>(by_class[k].size()); ++j)
            chosen.push_back(by_class[k][j]);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

namespace detail {

struct FlipCandidate {
    double magnitude;
    int u, v;
};

inline std::vector<FlipCandidate> ranked_flips(const Matrix& d_adj) {
    std::vector<FlipCandidate> out;
    int n = static_cast<int>(d_adj.rows());
    out.reserve(n * (n - 1) / 2);
    for (int u = 0; u < n; ++u)
        for (int v = u + 1; v < n; ++v) out.push_back({std::abs(d_adj(u, v)), u, v});
    std::sort(out.begin(), out.end(), [](const FlipCandidate& a, const FlipCandidate& b) {
        if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });
    return out;
}

/// Applies one greedy flip round. `maximize` reverses the admissibility rule:
/// loss-decreasing flips delete positive-gradient edges and add
/// negative-gradient non-edges; loss-increasing flips do the opposite.
inline Graph structural_flip_step(const GnnModel& model, const Graph& g, const Graph& orig,
                                  long budget, bool maximize, bool exact_rerank) {
    Graph cur = g;
    long dist = edit_distance(cur, orig);
    long round_cap = budget - dist;  // candidates considered this round
    if (round_cap <= 0 && !exact_rerank) return cur;

    auto admissible = [&](double grad, bool edge_present) {
        if (grad == 0.0) return false;
        bool deletes = grad > 0.0;  // loss-decreasing direction
        if (maximize) deletes = !deletes;
        return deletes == edge_present;
    };
    auto try_apply = [&](int u, int v, double grad) {
        bool present = cur.adjacency(u, v) != 0.0;
        if (!admissible(grad, present)) return false;
        long new_dist = dist + ((cur.adjacency(u, v) == orig.adjacency(u, v)) ? 1 : -1);
        if (new_dist > budget) return false;
        double nv = present ? 0.0 : 1.0;
        cur.adjacency(u, v) = nv;
        cur.adjacency(v, u) = nv;
        dist = new_dist;
        return true;
    };

    if (!exact_rerank) {
        GradientBundle b = compute_gradients(model, cur, cur.label);
        std::vector<FlipCandidate> cands = ranked_flips(b.d_adjacency);
        long considered = 0;
        for (const FlipCandidate& c : cands) {
            if (considered >= round_cap) break;
            ++considered;
            try_apply(c.u, c.v, b.d_adjacency(c.u, c.v));
        }
    } else {
        for (long applied = 0; applied < std::max(round_cap, 0L); ++applied) {
            GradientBundle b = compute_gradients(model, cur, cur.label);
            std::vector<FlipCandidate> cands = ranked_flips(b.d_adjacency);
            bool any = false;
            for (const FlipCandidate& c : cands)
                if (try_apply(c.u, c.v, b.d_adjacency(c.u, c.v))) {
                    any = true;
                    break;
                }
            if (!any) break;
        }
    }
    return cur;
}

inline int sample_categorical(const Vector& p, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(rng);
    double acc = 0.0;
    for (int i = 0; i < p.size(); ++i) {
        acc += p(i);
        if (u < acc) return i;
    }
    return static_cast<int>(p.size()) - 1;
}

}  // namespace detail

/// One greedy error-minimizing structural round: rank all unordered pairs by
/// |dL/dA|, walk the top (budget - spent) candidates, delete positive-gradient
/// edges and add negative-gradient non-edges, skipping sign-inadmissible
/// candidates and any flip that would push the cumulative edit distance past
/// the budget.
inline Graph emins_step(const GnnModel& model, const Graph& g, const Graph& orig, long budget,
                        bool exact_rerank = false) {
    return detail::structural_flip_step(model, g, orig, budget, false, exact_rerank);
}

/// Error-maximizing variant of emins_step (reversed admissibility).
inline Graph emaxs_step(const GnnModel& model, const Graph& g, const Graph& orig, long budget,
                        bool exact_rerank = false) {
    return detail::structural_flip_step(model, g, orig, budget, true, exact_rerank);
}

/// One error-minimizing feature round. Lifts the current one-hot rows to a
/// continuous block, runs S signed-gradient descent steps of size alpha, maps
/// each row through a temperature-scaled softmax and samples a one-hot
/// replacement, then applies sampled rows in descending per-node gradient
/// mass until the next change would push CostFeat vs the original past the
/// budget.
inline Graph eminf_step(const GnnModel& model, const Graph& g, const Graph& orig, long budget,
                        const PgdConfig& pgd, Rng& rng) {
    Graph cur = g;
    const int n = cur.node_count(), d = cur.feature_dim();
    Matrix x = cur.features;
    Matrix last_grad = Matrix::Zero(n, d);
    for (int s = 0; s < pgd.steps; ++s) {
        GradientBundle b = compute_gradients(model, cur, cur.label, nullptr, &x);
        last_grad = b.d_features;
        x -= pgd.alpha * b.d_features.array().sign().matrix();
    }

    std::vector<int> sampled(n);
    for (int v = 0; v < n; ++v) {
        Vector logits = x.row(v).transpose() * pgd.temperature;
        double mx = logits.maxCoeff();
        Vector p = (logits.array() - mx).exp();
        p /= p.sum();
        sampled[v] = detail::sample_categorical(p, rng);
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> mass(n);
    for (int v = 0; v < n; ++v) mass[v] = last_grad.row(v).cwiseAbs().sum();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return mass[a] != mass[b] ? mass[a] > mass[b] : a < b;
    });

    long cost = feature_cost(cur, orig);
    for (int v : order) {
        int cur_class = feature_class(cur, v);
        if (sampled[v] == cur_class) continue;
        int orig_class = feature_class(orig, v);
        long new_cost = cost;
        if (cur_class == orig_class) ++new_cost;          // introducing a change
        else if (sampled[v] == orig_class) --new_cost;    // reverting a change
        if (new_cost > budget) break;
        cur.features.row(v).setZero();
        cur.features(v, sampled[v]) = 1.0;
        cost = new_cost;
    }
    return cur;
}

/// Per-class injected trigger: an Erdos-Renyi subgraph with fixed node
/// features, installed verbatim into every poisoned graph of that class.
struct SubgraphTrigger {
    int class_id = 0;
    int node_count = 0;
    double density = 0.6;
    Graph pattern;  // adjacency + one-hot feature rows of the trigger nodes
};

struct CloakResult {
    GraphDataset dataset;
    std::vector<SubgraphTrigger> triggers;  // SubInj only, one per class
    std::vector<int> poisoned;              // train indices that were selected
    std::vector<long> budget;               // per train graph, aligned with split.train
    std::vector<long> budget_used;          // method-specific cost actually spent
    std::optional<GnnModel> surrogate;      // final surrogate state (EMinS/EMinF/EMaxS)
};

/// Uniform random structural baseline: flips min(c, available pairs) distinct
/// uniformly chosen pairs in every selected train graph.
inline GraphDataset random_cloak(const GraphDataset& ds, double beta, Rng& rng,
                                 const std::vector<int>* selection = nullptr) {
    GraphDataset out = ds;
    std::vector<int> all = ds.split.train;
    const std::vector<int>& targets = selection ? *selection : all;
    for (int i : targets) {
        Graph& g = out.graphs[i];
        long c = compute_budget(g, beta);
        int n = g.node_count();
        std::vector<std::pair<int, int>> pairs;
        pairs.reserve(n * (n - 1) / 2);
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) pairs.push_back({u, v});
        long flips = std::min<long>(c, static_cast<long>(pairs.size()));
        for (long k = 0; k < flips; ++k) {
            std::uniform_int_distribution<long> pick(k, static_cast<long>(pairs.size()) - 1);
            std::swap(pairs[k], pairs[pick(rng)]);
            auto [u, v] = pairs[k];
            double nv = g.adjacency(u, v) == 0.0 ? 1.0 : 0.0;
            g.adjacency(u, v) = nv;
            g.adjacency(v, u) = nv;
        }
    }
    return out;
}

/// Trigger-injection cloak. One trigger per class is generated from the
/// median train budget (size capped at trigger_max_nodes); each selected
/// train graph receives the trigger of its class on a uniformly chosen node
/// subset, clamped per graph so the combined edge + feature cost stays within
/// that graph's own budget.
inline CloakResult subinj_cloak(const GraphDataset& ds, const CloakJob& job) {
    job.validate();
    CloakResult res;
    res.dataset = ds;
    Rng rng = make_rng(job.seed);
    res.poisoned = select_poisoned(ds, job.poison_rate, derive_seed(job.seed, 1));

    std::vector<long> budgets;
    for (int i : ds.split.train) budgets.push_back(compute_budget(ds.graphs[i], job.beta));
    std::vector<long> sorted = budgets;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted.size() % 2 == 1
                        ? static_cast<double>(sorted[sorted.size() / 2])
                        : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
    long n_ds = std::min<long>(trigger_node_count(median), job.trigger_max_nodes);

    for (int k = 0; k < ds.class_count; ++k) {
        SubgraphTrigger t;
        t.class_id = k;
        t.node_count = static_cast<int>(n_ds);
        t.density = job.trigger_density;
        t.pattern = erdos_renyi(static_cast<int>(n_ds), job.trigger_density, rng);
        t.pattern.features = random_one_hot(static_cast<int>(n_ds), ds.feature_dim, rng);
        t.pattern.label = k;
        res.triggers.push_back(t);
    }

    std::set<int> selected(res.poisoned.begin(), res.poisoned.end());
    for (size_t ti = 0; ti < ds.split.train.size(); ++ti) {
        int i = ds.split.train[ti];
        long c = budgets[ti];
        res.budget.push_back(c);
        if (!selected.count(i)) {
            res.budget_used.push_back(0);
            continue;
        }
        Graph& g = res.dataset.graphs[i];
        const SubgraphTrigger& t = res.triggers[g.label];
        long n_g = std::min<long>(n_ds, trigger_node_count(static_cast<double>(c)));
        if (n_g > g.node_count())
            throw std::runtime_error("graph smaller than trigger (|V| < n)");

        std::vector<int> nodes(g.node_count());
        std::iota(nodes.begin(), nodes.end(), 0);
        for (long k = 0; k < n_g; ++k) {
            std::uniform_int_distribution<long> pick(k, static_cast<long>(nodes.size()) - 1);
            std::swap(nodes[k], nodes[pick(rng)]);
        }
        // nodes[0..n_g) is a random ordered subset; its order is the random
        // bijection trigger node j -> graph node nodes[j].
        for (long a = 0; a < n_g; ++a)
            for (long b = 0; b < n_g; ++b)
                g.adjacency(nodes[a], nodes[b]) = (a == b) ? 0.0 : t.pattern.adjacency(a, b);
        for (long a = 0; a < n_g; ++a) g.features.row(nodes[a]) = t.pattern.features.row(a);
        res.budget_used.push_back(combined_cost(res.dataset.graphs[i], ds.graphs[i]));
    }
    return res;
}

/// The alternating loop shared by EMinS, EMinF and EMaxS: each iteration
/// samples a train batch, perturbs every poisoned batch graph from its
/// current cloaked state (budget always measured against the ORIGINAL graph),
/// then takes one Adam step of the surrogate on the perturbed batch.
/// Perturbation state persists across iterations; val and test graphs are
/// never touched.
inline CloakResult emin_min_loop(const CloakJob& job, const GraphDataset& ds) {
    job.validate();
    if (job.method != CloakMethod::EMinS && job.method != CloakMethod::EMinF &&
        job.method != CloakMethod::EMaxS)
        throw std::invalid_argument("emin_min_loop expects EMinS, EMinF or EMaxS");

    CloakResult res;
    res.dataset = ds;
    res.poisoned = select_poisoned(ds, job.poison_rate, derive_seed(job.seed, 1));
    std::set<int> selected(res.poisoned.begin(), res.poisoned.end());
    for (int i : ds.split.train) res.budget.push_back(compute_budget(ds.graphs[i], job.beta));

    GnnModel surrogate = make_model(job.surrogate_arch, ds.feature_dim, ds.class_count,
                                    derive_seed(job.seed, 2));
    AdamOptimizer opt(surrogate, job.surrogate_train.lr, job.surrogate_train.weight_decay);
    Rng rng = make_rng(derive_seed(job.seed, 3));

    std::vector<long> budget_by_index(ds.size(), 0);
    for (size_t ti = 0; ti < ds.split.train.size(); ++ti)
        budget_by_index[ds.split.train[ti]] = res.budget[ti];

    auto perturb = [&](int i) {
        const Graph& orig = ds.graphs[i];
        Graph& cur = res.dataset.graphs[i];
        switch (job.method) {
            case CloakMethod::EMinS:
                cur = emins_step(surrogate, cur, orig, budget_by_index[i], job.exact_rerank);
                break;
            case CloakMethod::EMaxS:
                cur = emaxs_step(surrogate, cur, orig, budget_by_index[i], job.exact_rerank);
                break;
            case CloakMethod::EMinF:
                cur = eminf_step(surrogate, cur, orig, budget_by_index[i], job.pgd, rng);
                break;
            default: break;
        }
    };

    std::vector<int> train = ds.split.train;
    int batch_size = std::min<int>(job.surrogate_train.batch_size, static_cast<int>(train.size()));
    for (int step = 0; step < job.n_steps; ++step) {
        for (int k = 0; k < batch_size; ++k) {
            std::uniform_int_distribution<int> pick(k, static_cast<int>(train.size()) - 1);
            std::swap(train[k], train[pick(rng)]);
        }
        for (int k = 0; k < batch_size; ++k)
            if (selected.count(train[k])) perturb(train[k]);

        GnnModel grads = zeros_like(surrogate);
        auto gsum = param_views(grads);
        double batch_loss = 0.0;
        for (int k = 0; k < batch_size; ++k) {
            const Graph& ex = res.dataset.graphs[train[k]];
            ForwardCache cache;
            forward(surrogate, ex, Mode::Train, &cache, nullptr, nullptr, &rng);
            GradientBundle b = backward(surrogate, cache, ex.label);
            batch_loss += b.loss;
            auto gpart = param_views(b.param_grads);
            for (size_t i = 0; i < gsum.size(); ++i)
                Eigen::Map<Vector>(gsum[i].data, gsum[i].size) +=
                    Eigen::Map<Vector>(gpart[i].data, gpart[i].size);
        }
        if (!std::isfinite(batch_loss))
            throw std::runtime_error("surrogate diverged (non-finite loss) at min-min step " +
                                     std::to_string(step));
        double inv = 1.0 / batch_size;
        for (ParamView p : gsum) Eigen::Map<Vector>(p.data, p.size) *= inv;
        opt.step(grads);
    }

    if (job.final_pass)
        for (int i : res.poisoned) perturb(i);

    for (int i : ds.split.train) {
        long used = (job.method == CloakMethod::EMinF)
                        ? feature_cost(res.dataset.graphs[i], ds.graphs[i])
                        : edit_distance(res.dataset.graphs[i], ds.graphs[i]);
        res.budget_used.push_back(used);
    }
    res.surrogate = surrogate;
    return res;
}

/// Single entry point over all five methods.
inline CloakResult cloak_dataset(const GraphDataset& ds, const CloakJob& job) {
    job.validate();
    switch (job.method) {
        case CloakMethod::EMinS:
        case CloakMethod::EMinF:
        case CloakMethod::EMaxS:
            return emin_min_loop(job, ds);
        case CloakMethod::SubInj:
            return subinj_cloak(ds, job);
        case CloakMethod::Random: {
            CloakResult res;
            Rng rng = make_rng(job.seed);
            res.poisoned = select_poisoned(ds, job.poison_rate, derive_seed(job.seed, 1));
            res.dataset = random_cloak(ds, job.beta, rng, &res.poisoned);
            for (int i : ds.split.train) res.budget.push_back(compute_budget(ds.graphs[i], job.beta));
            for (int i : ds.split.train)
                res.budget_used.push_back(edit_distance(res.dataset.graphs[i], ds.graphs[i]));
            return res;
        }
    }
    throw std::logic_error("unknown cloak method");
}

}  // namespace graphcloak
