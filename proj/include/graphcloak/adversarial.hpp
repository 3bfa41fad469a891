#pragma once

#include "graphcloak/cloak.hpp"

namespace graphcloak {

/// Which perturbation space the training-time attacker explores. Structure
/// answers structural cloaks (greedy loss-maximizing edge flips), Feature
/// answers feature cloaks (signed-gradient ascent on the feature block).
enum class AttackSpace { Structure, Feature };

struct AttackConfig {
    long flip_budget = -1;   // Structure: flips per graph; -1 = per-graph budget via beta
    double beta = 0.05;      // used when flip_budget is adaptive
    double alpha = 0.025;    // Feature: PGD step size
    int steps = 4;           // Feature: PGD steps; 0 disables the attack
};

/// Error-maximizing counterpart of eminf_step's inner loop: S signed-gradient
/// ASCENT steps on a continuous lift of the features. The perturbed block is
/// used directly for the training step (no re-projection to one-hot; this is
/// a training-time data augmentation, not a dataset edit).
inline void feature_ascent(const GnnModel& model, Graph& g, double alpha, int steps) {
    Matrix x = g.features;
    for (int s = 0; s < steps; ++s) {
        GradientBundle b = compute_gradients(model, g, g.label, nullptr, &x);
        x += alpha * b.d_features.array().sign().matrix();
    }
    g.features = x;
}

/// Adversarial training: every batch is attacked in the chosen space against
/// the current model before the optimizer step. Budget 0 (or 0 PGD steps)
/// reduces exactly to standard training, including identical rng consumption.
/// Evaluation stays the caller's job and should use the clean test split.
inline TrainResult adversarial_train(GnnModel& model, const GraphDataset& ds, AttackSpace space,
                                     const TrainConfig& cfg, const AttackConfig& atk = {}) {
    BatchTransform transform = [space, atk](const GnnModel& m, std::vector<Graph>& batch, Rng&) {
        for (Graph& g : batch) {
            if (space == AttackSpace::Structure) {
                long budget = atk.flip_budget >= 0 ? atk.flip_budget : compute_budget(g, atk.beta);
                if (budget <= 0) continue;
                g = emaxs_step(m, g, g, budget);
            } else {
                if (atk.steps <= 0 || atk.alpha <= 0.0) continue;
                feature_ascent(m, g, atk.alpha, atk.steps);
            }
        }
    };
    return train(model, ds, cfg, transform);
}

}  // namespace graphcloak
