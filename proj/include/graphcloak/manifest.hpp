#pragma once

#include "graphcloak/cloak.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace graphcloak {

/// Sidecar written next to every cloaked dataset so each artifact is
/// self-describing: how it was produced, which graphs were touched, how much
/// budget each one spent, and the exact surrogate (by checkpoint hash).
struct CloakManifest {
    int schema_version = 1;
    std::string dataset;
    std::string method;
    std::uint64_t seed = 0;
    double beta = 0.05;
    double poison_rate = 1.0;
    int n_steps = 0;
    int feature_dim = 0;
    std::string surrogate_checkpoint_hash;  // empty for surrogate-free methods
    Split split;
    std::vector<int> poisoned;
    std::vector<long> budget;       // aligned with split.train
    std::vector<long> budget_used;  // method-specific accounting
    std::vector<SubgraphTrigger> triggers;
};

namespace detail {

inline nlohmann::json trigger_to_json(const SubgraphTrigger& t) {
    nlohmann::json j;
    j["class_id"] = t.class_id;
    j["node_count"] = t.node_count;
    j["density"] = t.density;
    std::vector<std::array<int, 2>> edges;
    for (int u = 0; u < t.pattern.node_count(); ++u)
        for (int v = u + 1; v < t.pattern.node_count(); ++v)
            if (t.pattern.adjacency(u, v) != 0.0) edges.push_back({u, v});
    j["edges"] = edges;
    std::vector<int> feats;
    for (int v = 0; v < t.pattern.node_count(); ++v) feats.push_back(feature_class(t.pattern, v));
    j["feature_classes"] = feats;
    return j;
}

inline SubgraphTrigger trigger_from_json(const nlohmann::json& j, int feature_dim) {
    SubgraphTrigger t;
    t.class_id = j.at("class_id").get<int>();
    t.node_count = j.at("node_count").get<int>();
    t.density = j.at("density").get<double>();
    t.pattern.label = t.class_id;
    t.pattern.adjacency = Matrix::Zero(t.node_count, t.node_count);
    for (const auto& e : j.at("edges")) {
        int u = e.at(0).get<int>(), v = e.at(1).get<int>();
        t.pattern.adjacency(u, v) = 1.0;
        t.pattern.adjacency(v, u) = 1.0;
    }
    t.pattern.features = Matrix::Zero(t.node_count, feature_dim);
    auto feats = j.at("feature_classes").get<std::vector<int>>();
    for (int v = 0; v < t.node_count; ++v) t.pattern.features(v, feats[v]) = 1.0;
    return t;
}

}  // namespace detail

inline nlohmann::json manifest_to_json(const CloakManifest& m) {
    nlohmann::json j;
    j["schema_version"] = m.schema_version;
    j["dataset"] = m.dataset;
    j["method"] = m.method;
    j["seed"] = m.seed;
    j["beta"] = m.beta;
    j["poison_rate"] = m.poison_rate;
    j["n_steps"] = m.n_steps;
    j["feature_dim"] = m.feature_dim;
    j["surrogate_checkpoint_hash"] = m.surrogate_checkpoint_hash;
    j["split"] = {{"train", m.split.train}, {"val", m.split.val}, {"test", m.split.test}};
    j["poisoned"] = m.poisoned;
    j["budget"] = m.budget;
    j["budget_used"] = m.budget_used;
    j["triggers"] = nlohmann::json::array();
    for (const SubgraphTrigger& t : m.triggers) j["triggers"].push_back(detail::trigger_to_json(t));
    return j;
}

inline CloakManifest manifest_from_json(const nlohmann::json& j) {
    CloakManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != 1) throw std::runtime_error("unsupported manifest schema version");
    m.dataset = j.at("dataset").get<std::string>();
    m.method = j.at("method").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.beta = j.at("beta").get<double>();
    m.poison_rate = j.at("poison_rate").get<double>();
    m.n_steps = j.at("n_steps").get<int>();
    m.feature_dim = j.at("feature_dim").get<int>();
    m.surrogate_checkpoint_hash = j.at("surrogate_checkpoint_hash").get<std::string>();
    m.split.train = j.at("split").at("train").get<std::vector<int>>();
    m.split.val = j.at("split").at("val").get<std::vector<int>>();
    m.split.test = j.at("split").at("test").get<std::vector<int>>();
    m.poisoned = j.at("poisoned").get<std::vector<int>>();
    m.budget = j.at("budget").get<std::vector<long>>();
    m.budget_used = j.at("budget_used").get<std::vector<long>>();
    for (const auto& t : j.at("triggers"))
        m.triggers.push_back(detail::trigger_from_json(t, m.feature_dim));
    return m;
}

inline void save_manifest(const CloakManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path.string());
    out << manifest_to_json(m).dump(2) << "\n";
}

inline CloakManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing manifest " + path.string());
    nlohmann::json j;
    in >> j;
    return manifest_from_json(j);
}

}  // namespace graphcloak
