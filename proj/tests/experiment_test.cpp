#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

using namespace graphcloak;

namespace {

namespace fs = std::filesystem;

GraphDataset write_synth_tu(const fs::path& root, int n_graphs = 24, std::uint64_t seed = 5) {
    GraphDataset ds = gctest::make_learnable_dataset(n_graphs, seed, 6, 9);
    save_tu_dataset(ds, root);
    return ds;
}

ExperimentConfig tiny_config(const fs::path& root, const fs::path& out) {
    ExperimentConfig cfg;
    cfg.dataset = "SYNTH";
    cfg.root = root.string();
    cfg.out_dir = out.string();
    cfg.victims = {"gcn"};
    cfg.surrogate = "gcn";
    cfg.methods = {"clean", "random", "emins"};
    cfg.seeds = {1, 2};
    cfg.n_steps = 2;
    cfg.train.max_epochs = 3;
    cfg.train_frac = 0.7;
    cfg.val_frac = 0.15;
    cfg.test_frac = 0.15;
    return cfg;
}

const ReportRow* find_row(const CloakReport& r, const std::string& method, std::uint64_t seed,
                          const std::string& victim, double rate) {
    for (const ReportRow& row : r.rows)
        if (row.method == method && row.seed == seed && row.victim == victim &&
            row.poison_rate == rate)
            return &row;
    return nullptr;
}

bool rows_equal_modulo_timing(const ReportRow& a, const ReportRow& b) {
    return a.dataset == b.dataset && a.method == b.method && a.surrogate == b.surrogate &&
           a.victim == b.victim && a.seed == b.seed && a.poison_rate == b.poison_rate &&
           a.clean_acc == b.clean_acc && a.cloaked_acc == b.cloaked_acc && a.drop == b.drop &&
           a.delta_edges_pct == b.delta_edges_pct &&
           a.delta_density_pct == b.delta_density_pct &&
           a.budget_histogram == b.budget_histogram && a.config_hash == b.config_hash;
}

}  // namespace

TEST_CASE("config hash covers semantics and ignores paths") {
    ExperimentConfig a;
    a.dataset = "MUTAG";
    ExperimentConfig b = a;
    b.root = "/somewhere/else";
    b.out_dir = "/tmp/elsewhere";
    CHECK(config_hash(a) == config_hash(b));

    ExperimentConfig c = a;
    c.beta = 0.01;
    CHECK(config_hash(c) != config_hash(a));
    ExperimentConfig d = a;
    d.seeds = {9};
    CHECK(config_hash(d) != config_hash(a));
    CHECK(config_hash(a).size() == 16);
}

TEST_CASE("config json round trips including nested optimizer blocks") {
    ExperimentConfig cfg;
    cfg.dataset = "PROTEINS";
    cfg.methods = {"emins", "eminf"};
    cfg.seeds = {4, 5, 6};
    cfg.pgd.alpha = 0.0125;
    cfg.train.batch_size = 16;
    cfg.surrogate_train.lr = 5e-3;
    cfg.mode = "poison_rate";
    cfg.poison_rates = {0.2, 0.4};
    cfg.root = "datadir";
    cfg.out_dir = "outdir";

    ExperimentConfig back = config_from_json(config_to_json(cfg));
    CHECK(config_hash(back) == config_hash(cfg));
    CHECK(back.root == cfg.root);
    CHECK(back.out_dir == cfg.out_dir);
    CHECK(back.pgd.alpha == cfg.pgd.alpha);
    CHECK(back.train.batch_size == 16);
    CHECK(back.surrogate_train.lr == 5e-3);
    CHECK(back.mode == "poison_rate");

    gctest::TempDir dir("cfg");
    std::ofstream(dir.path / "c.json") << config_to_json(cfg).dump(2);
    ExperimentConfig loaded = load_config(dir.path / "c.json");
    CHECK(config_hash(loaded) == config_hash(cfg));
    CHECK_THROWS_WITH(load_config(dir.path / "missing.json"),
                      Catch::Matchers::ContainsSubstring("missing config file"));
}

TEST_CASE("config validation rejects empty grids with specific messages") {
    ExperimentConfig cfg;
    cfg.dataset = "";
    CHECK_THROWS_WITH(cfg.validate(), Catch::Matchers::ContainsSubstring("dataset name required"));
    cfg.dataset = "X";
    cfg.methods = {};
    CHECK_THROWS_WITH(cfg.validate(),
                      Catch::Matchers::ContainsSubstring("nothing to run: method list is empty"));
    cfg.methods = {"clean"};
    cfg.poison_rates = {1.5};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.poison_rates = {1.0};
    cfg.seeds = {};
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("feature policy resolution prefers node labels when present") {
    gctest::TempDir dir("policy");
    write_synth_tu(dir.path);
    ExperimentConfig cfg;
    cfg.dataset = "SYNTH";
    cfg.root = dir.path.string();
    CHECK(resolve_feature_policy(cfg) == FeaturePolicy::NodeLabels);

    fs::remove(dir.path / "SYNTH" / "SYNTH_node_labels.txt");
    CHECK(resolve_feature_policy(cfg) == FeaturePolicy::DegreeOneHot);

    cfg.feature_policy = "degree";
    CHECK(resolve_feature_policy(cfg) == FeaturePolicy::DegreeOneHot);
    cfg.feature_policy = "nonsense";
    CHECK_THROWS_AS(resolve_feature_policy(cfg), std::invalid_argument);
}

TEST_CASE("manifests round trip through json files") {
    gctest::TempDir dir("manifest");
    CloakManifest m;
    m.dataset = "SYNTH";
    m.method = "subinj";
    m.seed = 77;
    m.beta = 0.05;
    m.poison_rate = 0.5;
    m.n_steps = 0;
    m.feature_dim = 3;
    m.split.train = {0, 1, 2, 5};
    m.split.val = {3};
    m.split.test = {4};
    m.poisoned = {0, 2};
    m.budget = {2, 3, 2, 4};
    m.budget_used = {2, 0, 1, 0};
    m.surrogate_checkpoint_hash = "0123456789abcdef";
    SubgraphTrigger t;
    t.class_id = 1;
    t.node_count = 2;
    t.density = 0.6;
    t.pattern.adjacency = Matrix::Zero(2, 2);
    t.pattern.adjacency(0, 1) = t.pattern.adjacency(1, 0) = 1.0;
    t.pattern.features = Matrix::Zero(2, 3);
    t.pattern.features(0, 2) = 1.0;
    t.pattern.features(1, 0) = 1.0;
    t.pattern.label = 1;
    m.triggers.push_back(t);

    save_manifest(m, dir.path / "manifest.json");
    CloakManifest back = load_manifest(dir.path / "manifest.json");
    CHECK(back.dataset == m.dataset);
    CHECK(back.method == m.method);
    CHECK(back.seed == m.seed);
    CHECK(back.poison_rate == m.poison_rate);
    CHECK(back.split.train == m.split.train);
    CHECK(back.split.val == m.split.val);
    CHECK(back.split.test == m.split.test);
    CHECK(back.poisoned == m.poisoned);
    CHECK(back.budget == m.budget);
    CHECK(back.budget_used == m.budget_used);
    CHECK(back.surrogate_checkpoint_hash == m.surrogate_checkpoint_hash);
    REQUIRE(back.triggers.size() == 1);
    CHECK(back.triggers[0].class_id == 1);
    CHECK(back.triggers[0].node_count == 2);
    CHECK(back.triggers[0].pattern.adjacency == t.pattern.adjacency);
    CHECK(back.triggers[0].pattern.features == t.pattern.features);
}

TEST_CASE("the main experiment produces a complete, reproducible, artifact-backed table") {
    gctest::TempDir dir("mainexp");
    write_synth_tu(dir.path / "data");
    ExperimentConfig cfg = tiny_config(dir.path / "data", dir.path / "out");

    CloakReport report = run_main_experiment(cfg);
    std::string hash = config_hash(cfg);

    // 2 seeds x (clean + random + emins) x 1 victim.
    REQUIRE(report.rows.size() == 6);
    for (std::uint64_t seed : {std::uint64_t(1), std::uint64_t(2)}) {
        const ReportRow* clean = find_row(report, "clean", seed, "gcn", 0.0);
        REQUIRE(clean);
        CHECK(clean->cloaked_acc == clean->clean_acc);
        CHECK(clean->drop == 0.0);
        CHECK(clean->surrogate.empty());

        for (const std::string& method : {std::string("random"), std::string("emins")}) {
            const ReportRow* row = find_row(report, method, seed, "gcn", 1.0);
            REQUIRE(row);
            CHECK(row->clean_acc == clean->clean_acc);
            CHECK(row->drop == row->clean_acc - row->cloaked_acc);
            CHECK(row->config_hash == hash);
            CHECK(row->clean_acc >= 0.0);
            CHECK(row->clean_acc <= 100.0);
            CHECK(row->cloaked_acc >= 0.0);
            CHECK(row->cloaked_acc <= 100.0);
            CHECK_FALSE(row->budget_histogram.empty());
            if (method == "emins") CHECK(row->surrogate == "gcn");
            if (method == "random") CHECK(row->surrogate.empty());
        }
    }

    fs::path out_root = fs::path(cfg.out_dir) / hash;
    CHECK(fs::exists(out_root / "models" / "SYNTH_clean_gcn_seed1.ckpt"));
    CHECK(fs::exists(out_root / "models" / "SYNTH_random_p1_gcn_seed2.ckpt"));
    CHECK(fs::exists(out_root / "models" / "SYNTH_emins_gcn_p1_gcn_seed1.ckpt"));

    fs::path emins_dir = out_root / "cloaked" / "emins_gcn_p1" / "seed1" / "SYNTH";
    REQUIRE(fs::exists(emins_dir / "SYNTH_A.txt"));
    REQUIRE(fs::exists(emins_dir / "manifest.json"));
    REQUIRE(fs::exists(emins_dir / "surrogate.ckpt"));

    CloakManifest man = load_manifest(emins_dir / "manifest.json");
    CHECK(man.dataset == "SYNTH");
    CHECK(man.method == "emins");
    CHECK(man.seed == 1);
    CHECK(man.n_steps == cfg.n_steps);
    CHECK(man.budget.size() == man.split.train.size());
    CHECK(man.budget_used.size() == man.split.train.size());
    GnnModel surrogate = load_checkpoint(emins_dir / "surrogate.ckpt");
    CHECK(checkpoint_hash(surrogate) == man.surrogate_checkpoint_hash);

    // The persisted cloaked dataset must reproduce the stealth numbers in the
    // row: reload it and compare against a fresh clean-train reference.
    GraphDataset master = load_experiment_dataset(cfg);
    Split split = split_dataset(master, cfg.train_frac, cfg.val_frac, cfg.test_frac, 1);
    GraphDataset persisted =
        load_tu_dataset(out_root / "cloaked" / "emins_gcn_p1" / "seed1", "SYNTH");
    REQUIRE(persisted.size() == master.size());
    GraphDataset clean_train;
    GraphDataset cloaked_train;
    {
        GraphDataset tmp = master;
        tmp.split = split;
        clean_train = subset_dataset(tmp, split.train);
        GraphDataset tmp2 = persisted;
        cloaked_train = subset_dataset(tmp2, split.train);
    }
    DatasetStats stats = dataset_stats(cloaked_train, &clean_train);
    const ReportRow* emins_row = find_row(report, "emins", 1, "gcn", 1.0);
    REQUIRE(emins_row);
    CHECK(stats.delta_edges_pct == emins_row->delta_edges_pct);
    CHECK(stats.delta_density_pct == emins_row->delta_density_pct);

    // Rerun: byte-identical rows apart from wall-clock columns.
    CloakReport again = run_main_experiment(cfg);
    REQUIRE(again.rows.size() == report.rows.size());
    for (size_t i = 0; i < report.rows.size(); ++i) {
        INFO("row " << i << " method " << report.rows[i].method);
        CHECK(rows_equal_modulo_timing(report.rows[i], again.rows[i]));
    }

    emit_report(report, out_root);
    CHECK(fs::exists(out_root / "report.csv"));
    CHECK(fs::exists(out_root / "report.json"));
}

TEST_CASE("a zero poison rate reproduces the clean accuracy exactly") {
    gctest::TempDir dir("sweep");
    write_synth_tu(dir.path / "data");
    ExperimentConfig cfg = tiny_config(dir.path / "data", dir.path / "out");
    cfg.methods = {"random"};
    cfg.seeds = {3};

    CloakReport report = run_poison_rate_sweep(cfg, {0.0, 1.0});
    REQUIRE(report.rows.size() == 2);
    const ReportRow* p0 = find_row(report, "random", 3, "gcn", 0.0);
    const ReportRow* p1 = find_row(report, "random", 3, "gcn", 1.0);
    REQUIRE(p0);
    REQUIRE(p1);
    CHECK(p0->cloaked_acc == p0->clean_acc);  // no graph was touched
    CHECK(p0->drop == 0.0);
    CHECK(p0->delta_edges_pct == 0.0);
    CHECK(p1->clean_acc == p0->clean_acc);

    CHECK_THROWS_WITH(run_poison_rate_sweep(cfg, {}),
                      Catch::Matchers::ContainsSubstring("rate list is empty"));
    CHECK_THROWS_AS(run_poison_rate_sweep(cfg, {-0.1}), std::invalid_argument);
}

TEST_CASE("the transferability matrix crosses sources with victims") {
    gctest::TempDir dir("transfer");
    write_synth_tu(dir.path / "data");
    ExperimentConfig cfg = tiny_config(dir.path / "data", dir.path / "out");
    cfg.methods = {"emins"};
    cfg.seeds = {4};

    CloakReport report = run_transferability(cfg, {"gcn", "gin"}, {"gcn", "sage"});
    REQUIRE(report.rows.size() == 4);  // 2 sources x 2 victims
    int gcn_source = 0, gin_source = 0;
    for (const ReportRow& row : report.rows) {
        CHECK(row.method == "emins");
        CHECK((row.victim == "gcn" || row.victim == "sage"));
        gcn_source += row.surrogate == "gcn" ? 1 : 0;
        gin_source += row.surrogate == "gin" ? 1 : 0;
        CHECK(row.drop == row.clean_acc - row.cloaked_acc);
    }
    CHECK(gcn_source == 2);
    CHECK(gin_source == 2);

    ExperimentConfig bad = cfg;
    bad.methods = {"random"};
    CHECK_THROWS_WITH(run_transferability(bad, {"gcn"}, {"gcn"}),
                      Catch::Matchers::ContainsSubstring("transferability requires"));
}
