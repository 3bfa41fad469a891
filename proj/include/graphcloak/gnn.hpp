#pragma once

#include "graphcloak/graph.hpp"
#include "graphcloak/soft_median.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace graphcloak {

enum class Arch { GCN, GIN, SAGE, GCNSoftMedian };

inline const char* arch_name(Arch a) {
    switch (a) {
        case Arch::GCN: return "gcn";
        case Arch::GIN: return "gin";
        case Arch::SAGE: return "sage";
        case Arch::GCNSoftMedian: return "gcn_softmedian";
    }
    throw std::logic_error("unknown arch");
}

inline Arch arch_from_name(const std::string& s) {
    if (s == "gcn") return Arch::GCN;
    if (s == "gin") return Arch::GIN;
    if (s == "sage") return Arch::SAGE;
    if (s == "gcn_softmedian") return Arch::GCNSoftMedian;
    throw std::invalid_argument("unknown architecture '" + s + "'");
}

struct DenseLayer {
    Matrix weight;  // in x out
    Vector bias;    // out
};

/// Message-passing classifier: `conv_layers` graph convolutions of width
/// `hidden_dim`, mean-pool readout, then a one-hidden-layer MLP head to
/// `class_count` logits. Parameter layout per conv layer:
///   GCN / GCNSoftMedian: conv[l]
///   GIN:  conv[l] and gin2[l], the two linear layers of the per-conv MLP
///   SAGE: conv[l] on the node's own embedding, sage_neigh[l] on the
///         neighbor mean (bias shared via conv[l])
struct GnnModel {
    Arch arch = Arch::GCN;
    int input_dim = 0;
    int hidden_dim = 32;
    int class_count = 0;
    int conv_layers = 3;
    double gin_epsilon = 0.0;              // fixed, not a trained parameter
    double dropout_rate = 0.0;             // head dropout (GIN uses 0.5)
    double soft_median_temperature = 1.0;  // GCNSoftMedian only

    std::vector<DenseLayer> conv;
    std::vector<DenseLayer> gin2;
    std::vector<Matrix> sage_neigh;
    DenseLayer head_hidden;
    DenseLayer head_out;
};

/// Flat view over every trainable array, in a fixed canonical order shared by
/// optimizers, gradient bundles, and checkpoints.
struct ParamView {
    double* data;
    Eigen::Index size;
};

inline std::vector<ParamView> param_views(GnnModel& m) {
    std::vector<ParamView> out;
    auto add = [&](auto& arr) { out.push_back({arr.data(), arr.size()}); };
    for (int l = 0; l < m.conv_layers; ++l) {
        add(m.conv[l].weight);
        if (m.arch == Arch::SAGE) add(m.sage_neigh[l]);
        add(m.conv[l].bias);
        if (m.arch == Arch::GIN) {
            add(m.gin2[l].weight);
            add(m.gin2[l].bias);
        }
    }
    add(m.head_hidden.weight);
    add(m.head_hidden.bias);
    add(m.head_out.weight);
    add(m.head_out.bias);
    return out;
}

namespace detail {

inline Matrix glorot(int rows, int cols, Rng& rng) {
    double limit = std::sqrt(6.0 / (rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Matrix w(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) w(r, c) = u(rng);
    return w;
}

}  // namespace detail

inline GnnModel make_model(Arch arch, int input_dim, int class_count, std::uint64_t seed,
                           int hidden_dim = 32, int conv_layers = 3) {
    if (input_dim < 1 || class_count < 1 || hidden_dim < 1 || conv_layers < 1)
        throw std::invalid_argument("model dimensions must be positive");
    GnnModel m;
    m.arch = arch;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.class_count = class_count;
    m.conv_layers = conv_layers;
    m.dropout_rate = (arch == Arch::GIN) ? 0.5 : 0.0;
    Rng rng = make_rng(seed);
    for (int l = 0; l < conv_layers; ++l) {
        int in = (l == 0) ? input_dim : hidden_dim;
        m.conv.push_back({detail::glorot(in, hidden_dim, rng), Vector::Zero(hidden_dim)});
        if (arch == Arch::GIN)
            m.gin2.push_back({detail::glorot(hidden_dim, hidden_dim, rng), Vector::Zero(hidden_dim)});
        if (arch == Arch::SAGE) m.sage_neigh.push_back(detail::glorot(in, hidden_dim, rng));
    }
    m.head_hidden = {detail::glorot(hidden_dim, hidden_dim, rng), Vector::Zero(hidden_dim)};
    m.head_out = {detail::glorot(hidden_dim, class_count, rng), Vector::Zero(class_count)};
    return m;
}

/// Same shapes as `like`, every parameter zero. Used for gradient storage.
inline GnnModel zeros_like(const GnnModel& like) {
    GnnModel z = like;
    for (ParamView p : param_views(z)) std::fill(p.data, p.data + p.size, 0.0);
    return z;
}

/// Defense-side variant: reuse a GCN's weights but aggregate neighborhood
/// messages with the soft median instead of the sum.
inline GnnModel robust_model(const GnnModel& gcn, double temperature) {
    if (gcn.arch != Arch::GCN)
        throw std::invalid_argument("robust_model expects a GCN base model");
    GnnModel m = gcn;
    m.arch = Arch::GCNSoftMedian;
    m.soft_median_temperature = temperature;
    return m;
}

enum class Mode { Train, Eval };

struct LayerCache {
    Matrix z_in;
    Matrix agg;    // GCN: Ahat z; GCNSoftMedian: aggregated messages; GIN: (1+eps)z + Az; SAGE: neighbor mean
    Matrix pre;    // pre-activation (GIN: first MLP layer's pre-activation)
    Matrix gin_h;  // GIN only: ReLU of `pre`
};

struct ForwardCache {
    bool valid = false;
    const GnnModel* model = nullptr;
    Mode mode = Mode::Eval;
    Matrix a_eff, x_eff;
    Matrix s;          // a_eff + I          (GCN variants)
    Vector deg, rsqrt; // row sums of s, deg^{-1/2}
    Matrix ahat;       // rsqrt_i s_ij rsqrt_j
    Vector sage_denom; // frozen neighbor counts, clamped to >= 1
    std::vector<LayerCache> layers;
    Vector pooled;
    Vector head_pre, head_act, head_dropped;
    Vector dropout_mask;  // per-unit multiplier, already inverted-scaled
    Vector logits;
};

/// Runs the model on one graph. `adjacency_override` / `feature_override`
/// substitute continuous relaxations for the stored binary matrices (shape
/// checked); gradients from backward() are with respect to whatever was used
/// here. Train mode applies inverted-scaling dropout to the head's hidden
/// activation and needs `dropout_rng` when the rate is nonzero.
inline Vector forward(const GnnModel& model, const Graph& g, Mode mode,
                      ForwardCache* cache = nullptr, const Matrix* adjacency_override = nullptr,
                      const Matrix* feature_override = nullptr, Rng* dropout_rng = nullptr) {
    const Matrix& a = adjacency_override ? *adjacency_override : g.adjacency;
    const Matrix& x = feature_override ? *feature_override : g.features;
    const int n = g.node_count();
    if (a.rows() != n || a.cols() != n) throw std::invalid_argument("adjacency shape mismatch");
    if (x.rows() != n || static_cast<int>(x.cols()) != model.input_dim)
        throw std::invalid_argument("feature shape does not match model input");
    if (!a.allFinite() || !x.allFinite()) throw std::invalid_argument("non-finite input");

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c = ForwardCache{};
    c.model = &model;
    c.mode = mode;
    c.a_eff = a;
    c.x_eff = x;

    const bool gcn_like = model.arch == Arch::GCN || model.arch == Arch::GCNSoftMedian;
    if (gcn_like) {
        c.s = a + Matrix::Identity(n, n);
        c.deg = c.s.rowwise().sum();
        c.rsqrt = c.deg.array().pow(-0.5).matrix();
        c.ahat = c.rsqrt.asDiagonal() * c.s * c.rsqrt.asDiagonal();
    }
    if (model.arch == Arch::SAGE) {
        c.sage_denom = Vector::Ones(n);
        for (int v = 0; v < n; ++v) {
            int count = 0;
            for (int u = 0; u < n; ++u)
                if (a(v, u) > 0.5) ++count;
            c.sage_denom(v) = std::max(count, 1);
        }
    }

    Matrix z = x;
    c.layers.resize(model.conv_layers);
    for (int l = 0; l < model.conv_layers; ++l) {
        LayerCache& lc = c.layers[l];
        lc.z_in = z;
        switch (model.arch) {
            case Arch::GCN: {
                lc.agg = c.ahat * z;
                lc.pre = (lc.agg * model.conv[l].weight).rowwise() + model.conv[l].bias.transpose();
                z = lc.pre.cwiseMax(0.0);
                break;
            }
            case Arch::GCNSoftMedian: {
                lc.agg = Matrix::Zero(n, z.cols());
                for (int v = 0; v < n; ++v) {
                    std::vector<int> nbr;
                    for (int u = 0; u < n; ++u)
                        if (c.ahat(v, u) != 0.0) nbr.push_back(u);
                    Matrix msgs(static_cast<int>(nbr.size()), z.cols());
                    for (size_t k = 0; k < nbr.size(); ++k)
                        msgs.row(static_cast<int>(k)) = c.ahat(v, nbr[k]) * z.row(nbr[k]);
                    lc.agg.row(v) =
                        soft_median_aggregate(msgs, model.soft_median_temperature).transpose();
                }
                lc.pre = (lc.agg * model.conv[l].weight).rowwise() + model.conv[l].bias.transpose();
                z = lc.pre.cwiseMax(0.0);
                break;
            }
            case Arch::GIN: {
                lc.agg = (1.0 + model.gin_epsilon) * z + c.a_eff * z;
                lc.pre = (lc.agg * model.conv[l].weight).rowwise() + model.conv[l].bias.transpose();
                lc.gin_h = lc.pre.cwiseMax(0.0);
                z = (lc.gin_h * model.gin2[l].weight).rowwise() + model.gin2[l].bias.transpose();
                break;
            }
            case Arch::SAGE: {
                lc.agg = c.sage_denom.cwiseInverse().asDiagonal() * (c.a_eff * z);
                lc.pre = (z * model.conv[l].weight + lc.agg * model.sage_neigh[l]).rowwise() +
                         model.conv[l].bias.transpose();
                z = lc.pre.cwiseMax(0.0);
                break;
            }
        }
    }

    c.pooled = z.colwise().mean().transpose();
    c.head_pre = model.head_hidden.weight.transpose() * c.pooled + model.head_hidden.bias;
    c.head_act = c.head_pre.cwiseMax(0.0);

    c.dropout_mask = Vector::Ones(model.hidden_dim);
    if (mode == Mode::Train && model.dropout_rate > 0.0) {
        if (!dropout_rng)
            throw std::invalid_argument("train-mode forward with dropout requires an rng");
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double keep = 1.0 - model.dropout_rate;
        for (int i = 0; i < model.hidden_dim; ++i)
            c.dropout_mask(i) = (u(*dropout_rng) < keep) ? 1.0 / keep : 0.0;
    }
    c.head_dropped = c.head_act.cwiseProduct(c.dropout_mask);
    c.logits = model.head_out.weight.transpose() * c.head_dropped + model.head_out.bias;
    c.valid = true;
    return c.logits;
}

/// Softmax cross-entropy with natural log, computed via log-sum-exp.
inline double cross_entropy(const Vector& logits, int label) {
    if (label < 0 || label >= logits.size()) throw std::invalid_argument("label out of range");
    if (!logits.allFinite()) throw std::invalid_argument("non-finite logits");
    double mx = logits.maxCoeff();
    double lse = mx + std::log((logits.array() - mx).exp().sum());
    return lse - logits(label);
}

inline Vector cross_entropy_grad(const Vector& logits, int label) {
    double mx = logits.maxCoeff();
    Vector p = (logits.array() - mx).exp();
    p /= p.sum();
    p(label) -= 1.0;
    return p;
}

struct GradientBundle {
    GnnModel param_grads;  // same shapes as the model, gradient values
    Matrix d_features;     // dL/dX, |V| x d
    Matrix d_adjacency;    // symmetrized dL/dA_uv + dL/dA_vu, zero diagonal
    double loss = 0.0;
};

/// Exact reverse-mode gradients of cross_entropy(forward(...), label) with
/// respect to parameters, input features, and the continuous adjacency
/// relaxation. Requires the cache produced by the matching forward call.
/// GCNSoftMedian reports a zero adjacency gradient (defense-side model; the
/// attack never differentiates through it).
inline GradientBundle backward(const GnnModel& model, const ForwardCache& c, int label) {
    if (!c.valid || c.model != &model)
        throw std::logic_error("stale forward cache: re-run forward on this model first");
    const int n = static_cast<int>(c.a_eff.rows());

    GradientBundle out;
    out.param_grads = zeros_like(model);
    out.loss = cross_entropy(c.logits, label);
    GnnModel& g = out.param_grads;

    Vector d_logits = cross_entropy_grad(c.logits, label);

    g.head_out.weight += c.head_dropped * d_logits.transpose();
    g.head_out.bias += d_logits;
    Vector d_dropped = model.head_out.weight * d_logits;
    Vector d_act = d_dropped.cwiseProduct(c.dropout_mask);
    Vector d_head_pre =
        d_act.cwiseProduct((c.head_pre.array() > 0.0).cast<double>().matrix());
    g.head_hidden.weight += c.pooled * d_head_pre.transpose();
    g.head_hidden.bias += d_head_pre;
    Vector d_pooled = model.head_hidden.weight * d_head_pre;

    Matrix d_z = Matrix::Zero(n, model.hidden_dim);
    d_z.rowwise() += d_pooled.transpose() / static_cast<double>(n);

    Matrix m_ahat = Matrix::Zero(n, n);  // GCN: accumulated dL/dAhat
    Matrix d_a = Matrix::Zero(n, n);     // GIN/SAGE: accumulated dL/dA_eff

    for (int l = model.conv_layers - 1; l >= 0; --l) {
        const LayerCache& lc = c.layers[l];
        switch (model.arch) {
            case Arch::GCN: {
                Matrix d_pre =
                    d_z.cwiseProduct((lc.pre.array() > 0.0).cast<double>().matrix());
                g.conv[l].weight += lc.agg.transpose() * d_pre;
                g.conv[l].bias += d_pre.colwise().sum().transpose();
                Matrix d_agg = d_pre * model.conv[l].weight.transpose();
                m_ahat += d_agg * lc.z_in.transpose();
                d_z = c.ahat.transpose() * d_agg;
                break;
            }
            case Arch::GCNSoftMedian: {
                Matrix d_pre =
                    d_z.cwiseProduct((lc.pre.array() > 0.0).cast<double>().matrix());
                g.conv[l].weight += lc.agg.transpose() * d_pre;
                g.conv[l].bias += d_pre.colwise().sum().transpose();
                Matrix d_agg = d_pre * model.conv[l].weight.transpose();
                d_z = Matrix::Zero(n, lc.z_in.cols());
                for (int v = 0; v < n; ++v) {
                    std::vector<int> nbr;
                    for (int u = 0; u < n; ++u)
                        if (c.ahat(v, u) != 0.0) nbr.push_back(u);
                    Matrix msgs(static_cast<int>(nbr.size()), lc.z_in.cols());
                    for (size_t k = 0; k < nbr.size(); ++k)
                        msgs.row(static_cast<int>(k)) = c.ahat(v, nbr[k]) * lc.z_in.row(nbr[k]);
                    Matrix d_msgs = soft_median_vjp(msgs, model.soft_median_temperature,
                                                    d_agg.row(v).transpose());
                    for (size_t k = 0; k < nbr.size(); ++k)
                        d_z.row(nbr[k]) += c.ahat(v, nbr[k]) * d_msgs.row(static_cast<int>(k));
                }
                break;
            }
            case Arch::GIN: {
                g.gin2[l].weight += lc.gin_h.transpose() * d_z;
                g.gin2[l].bias += d_z.colwise().sum().transpose();
                Matrix d_h = d_z * model.gin2[l].weight.transpose();
                Matrix d_pre =
                    d_h.cwiseProduct((lc.pre.array() > 0.0).cast<double>().matrix());
                g.conv[l].weight += lc.agg.transpose() * d_pre;
                g.conv[l].bias += d_pre.colwise().sum().transpose();
                Matrix d_agg = d_pre * model.conv[l].weight.transpose();
                d_a += d_agg * lc.z_in.transpose();
                d_z = (1.0 + model.gin_epsilon) * d_agg + c.a_eff.transpose() * d_agg;
                break;
            }
            case Arch::SAGE: {
                Matrix d_pre =
                    d_z.cwiseProduct((lc.pre.array() > 0.0).cast<double>().matrix());
                g.conv[l].weight += lc.z_in.transpose() * d_pre;
                g.sage_neigh[l] += lc.agg.transpose() * d_pre;
                g.conv[l].bias += d_pre.colwise().sum().transpose();
                Matrix d_mean = d_pre * model.sage_neigh[l].transpose();
                Matrix d_mean_scaled = c.sage_denom.cwiseInverse().asDiagonal() * d_mean;
                d_a += d_mean_scaled * lc.z_in.transpose();
                d_z = d_pre * model.conv[l].weight.transpose() +
                      c.a_eff.transpose() * d_mean_scaled;
                break;
            }
        }
    }
    out.d_features = d_z;

    if (model.arch == Arch::GCN) {
        // Ahat_ij = r_i S_ij r_j with r_i = deg_i^{-1/2}, deg_i = sum_j S_ij.
        // dL/dS_kl = M_kl r_k r_l + phi_k where phi collects the degree path
        // and is constant along row k.
        Matrix ms = m_ahat.cwiseProduct(c.s);
        Vector phi = (-0.5 * c.deg.array().pow(-1.5) *
                      (ms * c.rsqrt + ms.transpose() * c.rsqrt).array())
                         .matrix();
        Matrix d_s = m_ahat.cwiseProduct(c.rsqrt * c.rsqrt.transpose());
        d_s.colwise() += phi;
        d_a = d_s;  // S = A + I: off-diagonal entries map one-to-one
    }
    out.d_adjacency = d_a + d_a.transpose();
    out.d_adjacency.diagonal().setZero();
    return out;
}

/// forward + backward in one call. Eval mode by default so results are
/// deterministic (attack-side gradient queries never use dropout).
inline GradientBundle compute_gradients(const GnnModel& model, const Graph& g, int label,
                                        const Matrix* adjacency_override = nullptr,
                                        const Matrix* feature_override = nullptr,
                                        Mode mode = Mode::Eval, Rng* dropout_rng = nullptr) {
    ForwardCache cache;
    forward(model, g, mode, &cache, adjacency_override, feature_override, dropout_rng);
    return backward(model, cache, label);
}

}  // namespace graphcloak
