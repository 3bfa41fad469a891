#include "graphcloak/graphcloak.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace gc = graphcloak;
namespace fs = std::filesystem;

namespace {

// Shared by `train` and `eval`: a dataset directory is the TU folder itself
// (root/NAME); a manifest.json inside it (written by `cloak`) supplies the
// split so victims reuse the exact train/val/test partition of the cloak run.
struct LoadedDataset {
    gc::GraphDataset ds;
    bool has_manifest = false;
    gc::CloakManifest manifest;
};

LoadedDataset load_dataset_dir(const std::string& dir, std::uint64_t seed, double train_frac,
                               double val_frac, double test_frac) {
    fs::path p(dir);
    std::string name = p.filename().string();
    fs::path root = p.parent_path();
    gc::FeaturePolicy policy = fs::exists(p / (name + "_node_labels.txt"))
                                   ? gc::FeaturePolicy::NodeLabels
                                   : gc::FeaturePolicy::DegreeOneHot;
    LoadedDataset out;
    out.ds = gc::load_tu_dataset(root, name, policy);
    if (fs::exists(p / "manifest.json")) {
        out.manifest = gc::load_manifest(p / "manifest.json");
        out.ds.split = out.manifest.split;
        out.has_manifest = true;
    } else {
        out.ds.split = gc::split_dataset(out.ds, train_frac, val_frac, test_frac, seed);
    }
    return out;
}

int cmd_cloak(const std::string& root, const std::string& dataset, const std::string& method,
              const std::string& surrogate, double beta, std::uint64_t seed, int n_steps,
              double poison_rate, double trigger_density, int trigger_max_nodes,
              bool exact_rerank, bool final_pass, double train_frac, double val_frac,
              double test_frac, const std::string& out) {
    gc::ExperimentConfig cfg;
    cfg.dataset = dataset;
    cfg.root = root;
    gc::GraphDataset ds = gc::load_experiment_dataset(cfg);
    ds.split = gc::split_dataset(ds, train_frac, val_frac, test_frac, seed);

    gc::CloakJob job;
    job.method = gc::method_from_name(method);
    job.surrogate_arch = gc::arch_from_name(surrogate);
    job.surrogate_train.seed = seed;
    job.n_steps = n_steps;
    job.beta = beta;
    job.poison_rate = poison_rate;
    job.trigger_density = trigger_density;
    job.trigger_max_nodes = trigger_max_nodes;
    job.exact_rerank = exact_rerank;
    job.final_pass = final_pass;
    job.seed = seed;

    gc::CloakResult cr = gc::cloak_dataset(ds, job);
    gc::save_tu_dataset(cr.dataset, out);

    gc::CloakManifest man;
    man.dataset = dataset;
    man.method = method;
    man.seed = seed;
    man.beta = beta;
    man.poison_rate = poison_rate;
    man.n_steps = n_steps;
    man.feature_dim = cr.dataset.feature_dim;
    man.split = ds.split;
    man.poisoned = cr.poisoned;
    man.budget = cr.budget;
    man.budget_used = cr.budget_used;
    man.triggers = cr.triggers;
    fs::path dataset_dir = fs::path(out) / dataset;
    if (cr.surrogate) {
        man.surrogate_checkpoint_hash = gc::checkpoint_hash(*cr.surrogate);
        gc::save_checkpoint(*cr.surrogate, dataset_dir / "surrogate.ckpt");
    }
    gc::save_manifest(man, dataset_dir / "manifest.json");

    gc::GraphDataset clean_train = gc::subset_dataset(ds, ds.split.train);
    gc::GraphDataset cloaked_train = gc::subset_dataset(cr.dataset, ds.split.train);
    gc::DatasetStats stats = gc::dataset_stats(cloaked_train, &clean_train);
    long spent = 0, given = 0;
    for (long u : cr.budget_used) spent += u;
    for (long b : cr.budget) given += b;
    std::printf("cloaked %zu/%zu train graphs of %s with %s (seed %llu)\n", cr.poisoned.size(),
                ds.split.train.size(), dataset.c_str(), method.c_str(),
                static_cast<unsigned long long>(seed));
    std::printf("budget used %ld of %ld; avg-edge delta %+.2f%%, density delta %+.2f%%\n", spent,
                given, stats.delta_edges_pct, stats.delta_density_pct);
    std::printf("wrote %s\n", dataset_dir.string().c_str());
    return 0;
}

int cmd_train(const std::string& dir, const std::string& arch, std::uint64_t seed, double lr,
              double weight_decay, int batch_size, int max_epochs, const std::string& out) {
    LoadedDataset loaded = load_dataset_dir(dir, seed, 0.8, 0.1, 0.1);
    gc::GnnModel model =
        gc::make_model(gc::arch_from_name(arch), loaded.ds.feature_dim, loaded.ds.class_count,
                       gc::derive_seed(seed, gc::fnv1a64(arch)));
    gc::TrainConfig cfg;
    cfg.seed = seed;
    cfg.lr = lr;
    cfg.weight_decay = weight_decay;
    cfg.batch_size = batch_size;
    cfg.max_epochs = max_epochs;
    gc::TrainResult res = gc::train(model, loaded.ds, cfg);
    double test_acc = gc::evaluate_indices(model, loaded.ds, loaded.ds.split.test);
    if (!out.empty()) gc::save_checkpoint(model, out);
    std::printf("trained %s on %s: %zu epochs, best val loss %.4f (epoch %d)\n", arch.c_str(),
                loaded.ds.name.c_str(), res.history.size(), res.best_val_loss, res.best_epoch);
    std::printf("test accuracy %.2f%%\n", 100.0 * test_acc);
    if (!out.empty()) std::printf("wrote %s\n", out.c_str());
    return 0;
}

// With a manifest the checkpoint is scored on that run's held-out test split;
// a plain TU directory is scored in full.
int cmd_eval(const std::string& ckpt, const std::string& dir) {
    gc::GnnModel model = gc::load_checkpoint(ckpt);
    LoadedDataset loaded = load_dataset_dir(dir, 0, 0.8, 0.1, 0.1);
    if (model.input_dim != loaded.ds.feature_dim)
        throw std::runtime_error("model input dim " + std::to_string(model.input_dim) +
                                 " does not match dataset feature dim " +
                                 std::to_string(loaded.ds.feature_dim));
    std::vector<int> eval_set = loaded.has_manifest ? loaded.ds.split.test
                                                    : [&] {
                                                          std::vector<int> all(loaded.ds.size());
                                                          std::iota(all.begin(), all.end(), 0);
                                                          return all;
                                                      }();
    double acc = gc::evaluate_indices(model, loaded.ds, eval_set);
    std::printf("accuracy on %zu graphs: %.2f%%\n", eval_set.size(), 100.0 * acc);
    return 0;
}

int cmd_sweep(const std::string& config_path) {
    gc::ExperimentConfig cfg = gc::load_config(config_path);
    gc::CloakReport report;
    if (cfg.mode == "main") {
        report = gc::run_main_experiment(cfg);
    } else if (cfg.mode == "poison_rate") {
        report = gc::run_poison_rate_sweep(cfg, cfg.poison_rates);
    } else if (cfg.mode == "transferability") {
        report = gc::run_transferability(cfg, cfg.transfer_sources, cfg.victims);
    } else {
        throw std::runtime_error("unknown mode '" + cfg.mode + "'");
    }
    fs::path out_root = fs::path(cfg.out_dir) / gc::config_hash(cfg);
    gc::emit_report(report, out_root);
    for (const gc::AggregateRow& a : gc::aggregate_report(report)) {
        if (a.stat != "mean") continue;
        std::printf("%s %s%s%s on %s (p=%g): clean %.2f, cloaked %.2f, drop %.2f (%d seeds)\n",
                    a.dataset.c_str(), a.method.c_str(), a.surrogate.empty() ? "" : " via ",
                    a.surrogate.c_str(), a.victim.c_str(), a.poison_rate, a.clean_acc,
                    a.cloaked_acc, a.drop, a.seeds);
    }
    std::printf("report written to %s\n", (out_root / "report.csv").string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"graph dataset cloaking toolkit"};
    app.require_subcommand(1);

    auto* cloak = app.add_subcommand("cloak", "perturb a dataset's train split");
    std::string c_root = "data", c_dataset, c_method = "subinj", c_surrogate = "gcn", c_out = "out";
    std::uint64_t c_seed = 0;
    double c_beta = 0.05, c_rate = 1.0, c_density = 0.6;
    double c_train = 0.8, c_val = 0.1, c_test = 0.1;
    int c_steps = 5000, c_trigger_max = 5;
    bool c_exact = false, c_final = false;
    cloak->add_option("--root", c_root, "TU dataset root directory");
    cloak->add_option("--dataset", c_dataset, "dataset name")->required();
    cloak->add_option("--method", c_method, "emins|eminf|subinj|random|emaxs");
    cloak->add_option("--surrogate", c_surrogate, "surrogate arch for emin methods");
    cloak->add_option("--beta", c_beta, "budget coefficient");
    cloak->add_option("--seed", c_seed, "seed");
    cloak->add_option("--n-steps", c_steps, "min-min iterations");
    cloak->add_option("--poison-rate", c_rate, "fraction of train graphs to cloak");
    cloak->add_option("--trigger-density", c_density, "ER density of injected triggers");
    cloak->add_option("--trigger-max-nodes", c_trigger_max, "trigger size cap");
    cloak->add_flag("--exact-rerank", c_exact, "re-rank flips after each application");
    cloak->add_flag("--final-pass", c_final, "extra perturbation sweep with final surrogate");
    cloak->add_option("--train-frac", c_train, "train fraction");
    cloak->add_option("--val-frac", c_val, "val fraction");
    cloak->add_option("--test-frac", c_test, "test fraction");
    cloak->add_option("--out", c_out, "output directory");

    auto* tr = app.add_subcommand("train", "train a model on a TU dataset directory");
    std::string t_dir, t_arch = "gcn", t_out;
    std::uint64_t t_seed = 0;
    double t_lr = 1e-2, t_wd = 1e-4;
    int t_batch = 32, t_epochs = 300;
    tr->add_option("--dataset", t_dir, "dataset directory (root/NAME)")->required();
    tr->add_option("--arch", t_arch, "gcn|gin|sage|gcn_softmedian");
    tr->add_option("--seed", t_seed, "seed");
    tr->add_option("--lr", t_lr, "learning rate");
    tr->add_option("--weight-decay", t_wd, "weight decay");
    tr->add_option("--batch-size", t_batch, "batch size");
    tr->add_option("--max-epochs", t_epochs, "epoch cap");
    tr->add_option("--out", t_out, "checkpoint output path");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string e_model, e_dir;
    ev->add_option("--model", e_model, "checkpoint path")->required();
    ev->add_option("--dataset", e_dir, "dataset directory (root/NAME)")->required();

    auto* sw = app.add_subcommand("sweep", "run a configured experiment suite");
    std::string s_config;
    sw->add_option("--config", s_config, "experiment config JSON")->required();

    CLI11_PARSE(app, argc, argv);
    try {
        if (cloak->parsed())
            return cmd_cloak(c_root, c_dataset, c_method, c_surrogate, c_beta, c_seed, c_steps,
                             c_rate, c_density, c_trigger_max, c_exact, c_final, c_train, c_val,
                             c_test, c_out);
        if (tr->parsed())
            return cmd_train(t_dir, t_arch, t_seed, t_lr, t_wd, t_batch, t_epochs, t_out);
        if (ev->parsed()) return cmd_eval(e_model, e_dir);
        if (sw->parsed()) return cmd_sweep(s_config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
