#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

using namespace graphcloak;
namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& p, const std::string& content) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << content;
}

/// Two graphs: a triangle (label 7) and an edge (label 9), node labels
/// {5, 5, 8, 5, 8}.
void write_fixture(const fs::path& root, const std::string& name) {
    fs::path dir = root / name;
    write_file(dir / (name + "_A.txt"),
               "1, 2\n2, 1\n1, 3\n3, 1\n2, 3\n3, 2\n4, 5\n5, 4\n");
    write_file(dir / (name + "_graph_indicator.txt"), "1\n1\n1\n2\n2\n");
    write_file(dir / (name + "_graph_labels.txt"), "7\n9\n");
    write_file(dir / (name + "_node_labels.txt"), "5\n5\n8\n5\n8\n");
}

}  // namespace

TEST_CASE("TU loader parses graphs, labels and features") {
    gctest::TempDir tmp("tu_load");
    write_fixture(tmp.path, "FIX");
    GraphDataset ds = load_tu_dataset(tmp.path, "FIX");

    REQUIRE(ds.size() == 2);
    CHECK(ds.name == "FIX");
    CHECK(ds.class_count == 2);
    CHECK(ds.feature_dim == 2);  // node labels {5, 8} remapped to {0, 1}
    CHECK(ds.graphs[0].node_count() == 3);
    CHECK(ds.graphs[0].edge_count() == 3);
    CHECK(ds.graphs[0].label == 0);  // 7 < 9
    CHECK(ds.graphs[1].node_count() == 2);
    CHECK(ds.graphs[1].edge_count() == 1);
    CHECK(ds.graphs[1].label == 1);
    CHECK(ds.graphs[0].features(0, 0) == 1.0);  // node label 5 -> class 0
    CHECK(ds.graphs[0].features(2, 1) == 1.0);  // node label 8 -> class 1
    CHECK(ds.split.train == std::vector<int>{0, 1});
}

TEST_CASE("TU loader accepts comma without space") {
    gctest::TempDir tmp("tu_commas");
    fs::path dir = tmp.path / "X";
    write_file(dir / "X_A.txt", "1,2\n2,1\n");
    write_file(dir / "X_graph_indicator.txt", "1\n1\n");
    write_file(dir / "X_graph_labels.txt", "0\n");
    write_file(dir / "X_node_labels.txt", "0\n1\n");
    GraphDataset ds = load_tu_dataset(tmp.path, "X");
    CHECK(ds.graphs[0].edge_count() == 1);
}

TEST_CASE("degree one-hot policy builds features from degrees") {
    gctest::TempDir tmp("tu_degree");
    write_fixture(tmp.path, "FIX");
    GraphDataset ds = load_tu_dataset(tmp.path, "FIX", FeaturePolicy::DegreeOneHot);
    CHECK(ds.feature_dim == 3);  // degrees 0..2 possible, max degree 2
    CHECK(ds.graphs[0].features(0, 2) == 1.0);  // triangle node, degree 2
    CHECK(ds.graphs[1].features(0, 1) == 1.0);  // edge endpoint, degree 1
}

TEST_CASE("degree cap folds large degrees into the last column") {
    gctest::TempDir tmp("tu_cap");
    write_fixture(tmp.path, "FIX");
    GraphDataset ds = load_tu_dataset(tmp.path, "FIX", FeaturePolicy::DegreeOneHot, 2);
    CHECK(ds.feature_dim == 2);
    CHECK(ds.graphs[0].features(0, 1) == 1.0);  // degree 2 capped into column 1
}

TEST_CASE("TU loader error cases") {
    gctest::TempDir tmp("tu_errors");

    SECTION("missing file") {
        CHECK_THROWS_WITH(load_tu_dataset(tmp.path, "NOPE"),
                          Catch::Matchers::ContainsSubstring("missing file"));
    }
    SECTION("non-integer token") {
        write_fixture(tmp.path, "BAD");
        write_file(tmp.path / "BAD" / "BAD_graph_labels.txt", "7\nx\n");
        CHECK_THROWS_WITH(load_tu_dataset(tmp.path, "BAD"),
                          Catch::Matchers::ContainsSubstring("non-integer"));
    }
    SECTION("edge crossing graph boundary") {
        write_fixture(tmp.path, "BAD");
        write_file(tmp.path / "BAD" / "BAD_A.txt", "1, 4\n4, 1\n");
        CHECK_THROWS_WITH(load_tu_dataset(tmp.path, "BAD"),
                          Catch::Matchers::ContainsSubstring("different graphs"));
    }
    SECTION("node id outside dataset") {
        write_fixture(tmp.path, "BAD");
        write_file(tmp.path / "BAD" / "BAD_A.txt", "1, 99\n99, 1\n");
        CHECK_THROWS_WITH(load_tu_dataset(tmp.path, "BAD"),
                          Catch::Matchers::ContainsSubstring("outside dataset"));
    }
    SECTION("graph id out of range") {
        write_fixture(tmp.path, "BAD");
        write_file(tmp.path / "BAD" / "BAD_graph_indicator.txt", "1\n1\n1\n2\n3\n");
        CHECK_THROWS_AS(load_tu_dataset(tmp.path, "BAD"), std::runtime_error);
    }
}

TEST_CASE("save/load round trip preserves the dataset") {
    GraphDataset ds = gctest::make_learnable_dataset(12, 77);
    ds.name = "ROUND";
    gctest::TempDir tmp("tu_round");
    save_tu_dataset(ds, tmp.path);
    GraphDataset back = load_tu_dataset(tmp.path, "ROUND");

    REQUIRE(back.size() == ds.size());
    CHECK(back.class_count == ds.class_count);
    CHECK(back.feature_dim == ds.feature_dim);
    for (int i = 0; i < ds.size(); ++i) {
        CHECK(back.graphs[i].adjacency == ds.graphs[i].adjacency);
        CHECK(back.graphs[i].features == ds.graphs[i].features);
        CHECK(back.graphs[i].label == ds.graphs[i].label);
    }
}

TEST_CASE("saving a loaded dataset reproduces identical files") {
    GraphDataset ds = gctest::make_learnable_dataset(6, 13);
    ds.name = "STABLE";
    gctest::TempDir tmp("tu_stable");
    save_tu_dataset(ds, tmp.path / "first");
    GraphDataset back = load_tu_dataset(tmp.path / "first", "STABLE");
    save_tu_dataset(back, tmp.path / "second");

    for (const char* suffix :
         {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt", "_node_labels.txt"}) {
        std::ifstream f1(tmp.path / "first" / "STABLE" / ("STABLE" + std::string(suffix)),
                         std::ios::binary);
        std::ifstream f2(tmp.path / "second" / "STABLE" / ("STABLE" + std::string(suffix)),
                         std::ios::binary);
        std::stringstream s1, s2;
        s1 << f1.rdbuf();
        s2 << f2.rdbuf();
        CHECK(s1.str() == s2.str());
        CHECK_FALSE(s1.str().empty());
    }
}
