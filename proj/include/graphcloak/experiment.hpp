#pragma once

#include "graphcloak/adversarial.hpp"
#include "graphcloak/checkpoint.hpp"
#include "graphcloak/manifest.hpp"
#include "graphcloak/report.hpp"
#include "graphcloak/tu_io.hpp"

#include <chrono>
#include <map>

namespace graphcloak {

struct ExperimentConfig {
    std::string dataset;
    std::string root = "data";            // TU layout root directory
    std::string feature_policy = "auto";  // auto | node_labels | degree
    int degree_cap = 64;
    std::vector<std::string> victims = {"gcn"};
    std::string surrogate = "gcn";
    std::vector<std::string> methods = {"clean", "subinj"};
    std::vector<std::uint64_t> seeds = {0, 402, 6178};
    double beta = 0.05;
    std::vector<double> poison_rates = {1.0};
    int n_steps = 5000;
    double trigger_density = 0.6;
    int trigger_max_nodes = 5;
    PgdConfig pgd;
    TrainConfig train;            // victim training
    TrainConfig surrogate_train;  // surrogate optimizer inside the min-min loop
    double train_frac = 0.8, val_frac = 0.1, test_frac = 0.1;
    bool exact_rerank = false;
    bool final_pass = false;
    std::string mode = "main";  // main | poison_rate | transferability
    std::vector<std::string> transfer_sources = {"gcn"};
    std::string out_dir = "out";

    void validate() const {
        if (dataset.empty()) throw std::invalid_argument("dataset name required");
        if (seeds.empty()) throw std::invalid_argument("seed list must be non-empty");
        if (methods.empty()) throw std::invalid_argument("nothing to run: method list is empty");
        if (victims.empty()) throw std::invalid_argument("victim list must be non-empty");
        if (poison_rates.empty()) throw std::invalid_argument("poison rate grid must be non-empty");
        for (double p : poison_rates)
            if (p < 0.0 || p > 1.0) throw std::invalid_argument("poison rate outside [0,1]");
        train.validate();
        surrogate_train.validate();
    }
};

namespace detail {

inline nlohmann::json train_config_to_json(const TrainConfig& t) {
    return {{"lr", t.lr},
            {"weight_decay", t.weight_decay},
            {"batch_size", t.batch_size},
            {"max_epochs", t.max_epochs},
            {"plateau_factor", t.plateau_factor},
            {"plateau_patience", t.plateau_patience},
            {"early_stop_patience", t.early_stop_patience}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig t;
    t.lr = j.value("lr", t.lr);
    t.weight_decay = j.value("weight_decay", t.weight_decay);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.max_epochs = j.value("max_epochs", t.max_epochs);
    t.plateau_factor = j.value("plateau_factor", t.plateau_factor);
    t.plateau_patience = j.value("plateau_patience", t.plateau_patience);
    t.early_stop_patience = j.value("early_stop_patience", t.early_stop_patience);
    return t;
}

/// Canonical JSON over the fields that change the meaning of an experiment.
/// Paths (root, out_dir) are deliberately excluded: the same experiment run
/// from a different directory is still the same experiment.
inline nlohmann::json semantic_fields(const ExperimentConfig& c) {
    return {{"dataset", c.dataset},
            {"feature_policy", c.feature_policy},
            {"degree_cap", c.degree_cap},
            {"victims", c.victims},
            {"surrogate", c.surrogate},
            {"methods", c.methods},
            {"seeds", c.seeds},
            {"beta", c.beta},
            {"poison_rates", c.poison_rates},
            {"n_steps", c.n_steps},
            {"trigger_density", c.trigger_density},
            {"trigger_max_nodes", c.trigger_max_nodes},
            {"pgd", {{"alpha", c.pgd.alpha}, {"steps", c.pgd.steps}, {"temperature", c.pgd.temperature}}},
            {"train", train_config_to_json(c.train)},
            {"surrogate_train", train_config_to_json(c.surrogate_train)},
            {"train_frac", c.train_frac},
            {"val_frac", c.val_frac},
            {"test_frac", c.test_frac},
            {"exact_rerank", c.exact_rerank},
            {"final_pass", c.final_pass},
            {"mode", c.mode},
            {"transfer_sources", c.transfer_sources}};
}

struct StopWatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

inline bool needs_surrogate(const std::string& method) {
    return method == "emins" || method == "eminf" || method == "emaxs";
}

inline std::string rate_tag(double p) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", p);
    return buf;
}

}  // namespace detail

inline std::string config_hash(const ExperimentConfig& cfg) {
    std::string canon = detail::semantic_fields(cfg).dump();
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canon.data(), canon.size())));
    return buf;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    nlohmann::json j = detail::semantic_fields(c);
    j["root"] = c.root;
    j["out_dir"] = c.out_dir;
    return j;
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.dataset = j.at("dataset").get<std::string>();
    c.root = j.value("root", c.root);
    c.feature_policy = j.value("feature_policy", c.feature_policy);
    c.degree_cap = j.value("degree_cap", c.degree_cap);
    c.victims = j.value("victims", c.victims);
    c.surrogate = j.value("surrogate", c.surrogate);
    c.methods = j.value("methods", c.methods);
    c.seeds = j.value("seeds", c.seeds);
    c.beta = j.value("beta", c.beta);
    c.poison_rates = j.value("poison_rates", c.poison_rates);
    c.n_steps = j.value("n_steps", c.n_steps);
    c.trigger_density = j.value("trigger_density", c.trigger_density);
    c.trigger_max_nodes = j.value("trigger_max_nodes", c.trigger_max_nodes);
    if (j.contains("pgd")) {
        c.pgd.alpha = j["pgd"].value("alpha", c.pgd.alpha);
        c.pgd.steps = j["pgd"].value("steps", c.pgd.steps);
        c.pgd.temperature = j["pgd"].value("temperature", c.pgd.temperature);
    }
    if (j.contains("train")) c.train = detail::train_config_from_json(j["train"]);
    if (j.contains("surrogate_train"))
        c.surrogate_train = detail::train_config_from_json(j["surrogate_train"]);
    c.train_frac = j.value("train_frac", c.train_frac);
    c.val_frac = j.value("val_frac", c.val_frac);
    c.test_frac = j.value("test_frac", c.test_frac);
    c.exact_rerank = j.value("exact_rerank", c.exact_rerank);
    c.final_pass = j.value("final_pass", c.final_pass);
    c.mode = j.value("mode", c.mode);
    c.transfer_sources = j.value("transfer_sources", c.transfer_sources);
    c.out_dir = j.value("out_dir", c.out_dir);
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing config file " + path.string());
    nlohmann::json j;
    in >> j;
    return config_from_json(j);
}

inline FeaturePolicy resolve_feature_policy(const ExperimentConfig& cfg) {
    if (cfg.feature_policy == "node_labels") return FeaturePolicy::NodeLabels;
    if (cfg.feature_policy == "degree") return FeaturePolicy::DegreeOneHot;
    if (cfg.feature_policy != "auto")
        throw std::invalid_argument("unknown feature policy '" + cfg.feature_policy + "'");
    std::filesystem::path labels =
        std::filesystem::path(cfg.root) / cfg.dataset / (cfg.dataset + "_node_labels.txt");
    return std::filesystem::exists(labels) ? FeaturePolicy::NodeLabels
                                           : FeaturePolicy::DegreeOneHot;
}

inline GraphDataset load_experiment_dataset(const ExperimentConfig& cfg) {
    return load_tu_dataset(cfg.root, cfg.dataset, resolve_feature_policy(cfg), cfg.degree_cap);
}

namespace detail {

inline CloakJob make_job(const ExperimentConfig& cfg, const std::string& method,
                         const std::string& source, double rate, std::uint64_t seed) {
    CloakJob job;
    job.method = method_from_name(method);
    job.surrogate_arch = arch_from_name(source.empty() ? cfg.surrogate : source);
    job.surrogate_train = cfg.surrogate_train;
    job.surrogate_train.seed = seed;
    job.n_steps = cfg.n_steps;
    job.pgd = cfg.pgd;
    job.beta = cfg.beta;
    job.poison_rate = rate;
    job.trigger_density = cfg.trigger_density;
    job.trigger_max_nodes = cfg.trigger_max_nodes;
    job.exact_rerank = cfg.exact_rerank;
    job.final_pass = cfg.final_pass;
    job.seed = seed;
    return job;
}

/// Shared engine for the main table, the poison-rate sweep, and the
/// transferability matrix. For every seed it rebuilds the stratified split,
/// trains per-victim clean baselines, then for each (method, source, rate)
/// cloaks once and trains every victim on the cloaked copy. All artifacts
/// (cloaked TU datasets, manifests, checkpoints) land under
/// out_dir/<config_hash>/.
inline CloakReport run_cells(const ExperimentConfig& cfg, const std::vector<std::string>& methods,
                             const std::vector<double>& rates,
                             const std::vector<std::string>& sources) {
    namespace fs = std::filesystem;
    cfg.validate();
    if (methods.empty()) throw std::invalid_argument("nothing to run: method list is empty");
    GraphDataset master = load_experiment_dataset(cfg);
    std::string hash = config_hash(cfg);
    fs::path out_root = fs::path(cfg.out_dir) / hash;
    fs::create_directories(out_root / "models");

    CloakReport report;
    for (std::uint64_t seed : cfg.seeds) {
        GraphDataset ds = master;
        ds.split = split_dataset(master, cfg.train_frac, cfg.val_frac, cfg.test_frac, seed);

        std::map<std::string, std::pair<double, double>> clean;  // victim -> (acc, seconds)
        for (const std::string& victim : cfg.victims) {
            StopWatch sw;
            GnnModel model = make_model(arch_from_name(victim), ds.feature_dim, ds.class_count,
                                        derive_seed(seed, fnv1a64(victim)));
            TrainConfig tc = cfg.train;
            tc.seed = seed;
            train(model, ds, tc);
            double acc = evaluate_indices(model, ds, ds.split.test);
            clean[victim] = {acc, sw.seconds()};
            save_checkpoint(model, out_root / "models" /
                                       (cfg.dataset + "_clean_" + victim + "_seed" +
                                        std::to_string(seed) + ".ckpt"));
        }

        for (const std::string& method : methods) {
            if (method == "clean") {
                for (const std::string& victim : cfg.victims) {
                    ReportRow row;
                    row.dataset = cfg.dataset;
                    row.method = "clean";
                    row.victim = victim;
                    row.seed = seed;
                    row.poison_rate = 0.0;
                    row.clean_acc = 100.0 * clean[victim].first;
                    row.cloaked_acc = row.clean_acc;
                    row.drop = 0.0;
                    row.train_seconds = clean[victim].second;
                    row.config_hash = hash;
                    report.rows.push_back(row);
                }
                continue;
            }
            std::vector<std::string> method_sources =
                needs_surrogate(method) ? sources : std::vector<std::string>{""};
            for (const std::string& source : method_sources) {
                for (double rate : rates) {
                    StopWatch cloak_sw;
                    CloakJob job = make_job(cfg, method, source, rate, seed);
                    CloakResult cr = cloak_dataset(ds, job);
                    double cloak_secs = cloak_sw.seconds();

                    GraphDataset clean_train = subset_dataset(ds, ds.split.train);
                    GraphDataset cloaked_train = subset_dataset(cr.dataset, ds.split.train);
                    DatasetStats stats = dataset_stats(cloaked_train, &clean_train);

                    std::string cell = method;
                    if (!source.empty()) cell += "_" + source;
                    cell += "_p" + rate_tag(rate);
                    fs::path cloak_dir = out_root / "cloaked" / cell / ("seed" + std::to_string(seed));
                    save_tu_dataset(cr.dataset, cloak_dir);
                    fs::path dataset_dir = cloak_dir / cr.dataset.name;

                    CloakManifest man;
                    man.dataset = cfg.dataset;
                    man.method = method;
                    man.seed = seed;
                    man.beta = cfg.beta;
                    man.poison_rate = rate;
                    man.n_steps = detail::needs_surrogate(method) ? cfg.n_steps : 0;
                    man.feature_dim = cr.dataset.feature_dim;
                    man.split = ds.split;
                    man.poisoned = cr.poisoned;
                    man.budget = cr.budget;
                    man.budget_used = cr.budget_used;
                    man.triggers = cr.triggers;
                    if (cr.surrogate) {
                        man.surrogate_checkpoint_hash = checkpoint_hash(*cr.surrogate);
                        save_checkpoint(*cr.surrogate, dataset_dir / "surrogate.ckpt");
                    }
                    save_manifest(man, dataset_dir / "manifest.json");

                    for (const std::string& victim : cfg.victims) {
                        StopWatch train_sw;
                        GnnModel model =
                            make_model(arch_from_name(victim), cr.dataset.feature_dim,
                                       cr.dataset.class_count, derive_seed(seed, fnv1a64(victim)));
                        TrainConfig tc = cfg.train;
                        tc.seed = seed;
                        train(model, cr.dataset, tc);
                        double acc = evaluate_indices(model, cr.dataset, ds.split.test);
                        save_checkpoint(model, out_root / "models" /
                                                   (cfg.dataset + "_" + cell + "_" + victim +
                                                    "_seed" + std::to_string(seed) + ".ckpt"));

                        ReportRow row;
                        row.dataset = cfg.dataset;
                        row.method = method;
                        row.surrogate = source;
                        row.victim = victim;
                        row.seed = seed;
                        row.poison_rate = rate;
                        row.clean_acc = 100.0 * clean[victim].first;
                        row.cloaked_acc = 100.0 * acc;
                        row.drop = row.clean_acc - row.cloaked_acc;
                        row.delta_edges_pct = stats.delta_edges_pct;
                        row.delta_density_pct = stats.delta_density_pct;
                        row.budget_histogram = budget_histogram_string(cr.budget_used);
                        row.cloak_seconds = cloak_secs;
                        row.train_seconds = train_sw.seconds();
                        row.config_hash = hash;
                        report.rows.push_back(row);
                    }
                }
            }
        }
    }
    return report;
}

}  // namespace detail

/// Main results table: every configured method at full poison rate.
inline CloakReport run_main_experiment(const ExperimentConfig& cfg) {
    return detail::run_cells(cfg, cfg.methods, {1.0}, {cfg.surrogate});
}

/// Poison-rate sweep: each method is run once per rate in `rates`, cloaking
/// exactly floor(p |train|) stratified-random train graphs.
inline CloakReport run_poison_rate_sweep(const ExperimentConfig& cfg,
                                         const std::vector<double>& rates) {
    if (rates.empty()) throw std::invalid_argument("nothing to run: rate list is empty");
    for (double p : rates)
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("poison rate outside [0,1]");
    return detail::run_cells(cfg, cfg.methods, rates, {cfg.surrogate});
}

/// Transferability matrix: cloak once per source architecture, train every
/// victim architecture on each cloaked dataset. Only surrogate-driven methods
/// make sense here (trigger and random cloaks have no source model).
inline CloakReport run_transferability(const ExperimentConfig& cfg,
                                       const std::vector<std::string>& sources,
                                       const std::vector<std::string>& victims) {
    for (const std::string& m : cfg.methods)
        if (!detail::needs_surrogate(m) && m != "clean")
            throw std::invalid_argument("transferability requires surrogate-based methods, got '" +
                                        m + "'");
    if (sources.empty() || victims.empty())
        throw std::invalid_argument("nothing to run: empty source or victim list");
    ExperimentConfig c = cfg;
    c.victims = victims;
    return detail::run_cells(c, cfg.methods, {1.0}, sources);
}

/// Writes both report formats next to each other under the experiment root.
inline void emit_report(const CloakReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_report_csv(report, dir / "report.csv");
    write_report_json(report, dir / "report.json");
}

}  // namespace graphcloak
