#pragma once

#include "graphcloak/dataset.hpp"
#include "graphcloak/gnn.hpp"

#include <functional>
#include <limits>

namespace graphcloak {

struct TrainConfig {
    double lr = 1e-2;
    double weight_decay = 1e-4;  // L2 added into the gradient, torch-style
    int batch_size = 32;
    int max_epochs = 300;
    double plateau_factor = 0.25;   // lr multiplier after a plateau
    int plateau_patience = 20;      // consecutive non-improving epochs before reducing
    int early_stop_patience = 50;   // epochs past the best validation loss
    std::uint64_t seed = 0;

    void validate() const {
        if (lr <= 0.0 || batch_size < 1 || max_epochs < 1) throw std::invalid_argument("bad train config");
        if (plateau_factor <= 0.0 || plateau_factor >= 1.0)
            throw std::invalid_argument("plateau factor must be in (0,1)");
        if (plateau_patience < 1 || early_stop_patience < 1)
            throw std::invalid_argument("patience values must be positive");
    }
};

class AdamOptimizer {
  public:
    AdamOptimizer(GnnModel& model, double lr, double weight_decay, double beta1 = 0.9,
                  double beta2 = 0.999, double eps = 1e-8)
        : model_(&model), lr_(lr), wd_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (ParamView p : param_views(model)) {
            m_.push_back(Vector::Zero(p.size));
            v_.push_back(Vector::Zero(p.size));
        }
    }

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

    void step(GnnModel& grads) {
        ++t_;
        auto params = param_views(*model_);
        auto gviews = param_views(grads);
        if (gviews.size() != params.size()) throw std::invalid_argument("gradient shape mismatch");
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (size_t i = 0; i < params.size(); ++i) {
            Eigen::Map<Vector> theta(params[i].data, params[i].size);
            Eigen::Map<Vector> grad(gviews[i].data, gviews[i].size);
            if (wd_ != 0.0) grad += wd_ * theta;
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad;
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad.cwiseProduct(grad);
            theta -= lr_ * (m_[i] / bc1).cwiseQuotient(((v_[i] / bc2).cwiseSqrt().array() + eps_).matrix());
        }
    }

  private:
    GnnModel* model_;
    double lr_, wd_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Vector> m_, v_;
};

/// Mutates a mini-batch in place before the gradient step; used for
/// adversarial training and for the surrogate updates inside the cloaking
/// loop. Receives the current model and the loop rng.
using BatchTransform = std::function<void(const GnnModel&, std::vector<Graph>&, Rng&)>;

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0, train_acc = 0.0;
    double val_loss = 0.0, val_acc = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_loss = std::numeric_limits<double>::infinity();
};

/// Argmax-logit prediction; ties go to the lowest class index.
inline int predict(const GnnModel& model, const Graph& g) {
    Vector logits = forward(model, g, Mode::Eval);
    int best = 0;
    for (int j = 1; j < logits.size(); ++j)
        if (logits(j) > logits(best)) best = j;
    return best;
}

inline double evaluate(const GnnModel& model, const std::vector<Graph>& graphs) {
    if (graphs.empty()) throw std::invalid_argument("empty evaluation set");
    int correct = 0;
    for (const Graph& g : graphs)
        if (predict(model, g) == g.label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

inline double evaluate_indices(const GnnModel& model, const GraphDataset& ds,
                               const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("empty evaluation set");
    int correct = 0;
    for (int i : indices)
        if (predict(model, ds.graphs[i]) == ds.graphs[i].label) ++correct;
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

inline double mean_loss(const GnnModel& model, const GraphDataset& ds,
                        const std::vector<int>& indices) {
    if (indices.empty()) throw std::invalid_argument("empty evaluation set");
    double total = 0.0;
    for (int i : indices)
        total += cross_entropy(forward(model, ds.graphs[i], Mode::Eval), ds.graphs[i].label);
    return total / static_cast<double>(indices.size());
}

/// Mini-batch Adam with reduce-on-plateau and early stopping, both monitoring
/// validation loss. The model with the best validation loss is restored at
/// the end. Fully deterministic for a fixed seed: batch order, dropout, and
/// any transform randomness all come from one generator.
inline TrainResult train(GnnModel& model, const GraphDataset& ds, const TrainConfig& cfg,
                         const BatchTransform& transform = {}) {
    cfg.validate();
    if (ds.split.train.empty() || ds.split.val.empty())
        throw std::invalid_argument("train requires non-empty train and val splits");

    Rng rng = make_rng(cfg.seed);
    AdamOptimizer opt(model, cfg.lr, cfg.weight_decay);

    TrainResult result;
    GnnModel best = model;
    int epochs_since_improvement = 0;

    std::vector<int> order = ds.split.train;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
            size_t end = std::min(order.size(), start + cfg.batch_size);
            std::vector<Graph> batch;
            batch.reserve(end - start);
            for (size_t k = start; k < end; ++k) batch.push_back(ds.graphs[order[k]]);
            if (transform) transform(model, batch, rng);

            GnnModel grads = zeros_like(model);
            auto gsum = param_views(grads);
            double batch_loss = 0.0;
            for (const Graph& ex : batch) {
                ForwardCache cache;
                forward(model, ex, Mode::Train, &cache, nullptr, nullptr, &rng);
                GradientBundle b = backward(model, cache, ex.label);
                batch_loss += b.loss;
                auto gpart = param_views(b.param_grads);
                for (size_t i = 0; i < gsum.size(); ++i)
                    Eigen::Map<Vector>(gsum[i].data, gsum[i].size) +=
                        Eigen::Map<Vector>(gpart[i].data, gpart[i].size);
            }
            double inv = 1.0 / static_cast<double>(batch.size());
            for (ParamView p : gsum) Eigen::Map<Vector>(p.data, p.size) *= inv;
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("non-finite training loss at epoch " + std::to_string(epoch));
            opt.step(grads);
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.lr = opt.learning_rate();
        rec.train_loss = mean_loss(model, ds, ds.split.train);
        rec.train_acc = evaluate_indices(model, ds, ds.split.train);
        rec.val_loss = mean_loss(model, ds, ds.split.val);
        rec.val_acc = evaluate_indices(model, ds, ds.split.val);
        result.history.push_back(rec);

        if (rec.val_loss < result.best_val_loss) {
            result.best_val_loss = rec.val_loss;
            result.best_epoch = epoch;
            best = model;
            epochs_since_improvement = 0;
        } else {
            ++epochs_since_improvement;
            if (epochs_since_improvement % cfg.plateau_patience == 0)
                opt.set_learning_rate(opt.learning_rate() * cfg.plateau_factor);
        }
        if (epoch - result.best_epoch >= cfg.early_stop_patience) break;
    }

    model = best;
    return result;
}

}  // namespace graphcloak
