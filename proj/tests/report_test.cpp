#include "test_support.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>

using namespace graphcloak;

namespace {

ReportRow make_row(const std::string& method, std::uint64_t seed, double clean, double cloaked) {
    ReportRow r;
    r.dataset = "SYNTH";
    r.method = method;
    r.surrogate = method == "random" ? "" : "gcn";
    r.victim = "gin";
    r.seed = seed;
    r.poison_rate = 1.0;
    r.clean_acc = clean;
    r.cloaked_acc = cloaked;
    r.drop = clean - cloaked;
    r.delta_edges_pct = 1.5;
    r.delta_density_pct = -0.75;
    r.budget_histogram = "1:3;2:5";
    r.cloak_seconds = 2.0;
    r.train_seconds = 4.0;
    r.config_hash = "deadbeefdeadbeef";
    return r;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("budget histogram counts ascending distinct values") {
    CHECK(budget_histogram_string({3, 1, 1, 3, 3, 0}) == "0:1;1:2;3:3");
    CHECK(budget_histogram_string({}) == "");
    CHECK(budget_histogram_string({7}) == "7:1");
}

TEST_CASE("aggregation produces hand-checkable mean and sample std rows") {
    CloakReport report;
    report.rows.push_back(make_row("emins", 1, 80.0, 30.0));
    report.rows.push_back(make_row("emins", 2, 84.0, 36.0));
    report.rows.push_back(make_row("emins", 3, 88.0, 48.0));
    report.rows.push_back(make_row("random", 1, 80.0, 75.0));

    std::vector<AggregateRow> agg = aggregate_report(report);
    REQUIRE(agg.size() == 4);  // two groups, mean + std each

    const AggregateRow& mean = agg[0];
    CHECK(mean.method == "emins");
    CHECK(mean.stat == "mean");
    CHECK(mean.seeds == 3);
    CHECK(mean.clean_acc == Catch::Approx(84.0));
    CHECK(mean.cloaked_acc == Catch::Approx(38.0));
    CHECK(mean.drop == Catch::Approx(46.0));

    const AggregateRow& stddev = agg[1];
    CHECK(stddev.stat == "std");
    // clean: {80,84,88} -> var = (16+0+16)/2 = 16, std = 4
    CHECK(stddev.clean_acc == Catch::Approx(4.0));
    // cloaked: {30,36,48} -> deviations {-8,-2,10} -> var = (64+4+100)/2 = 84
    CHECK(stddev.cloaked_acc == Catch::Approx(std::sqrt(84.0)));

    const AggregateRow& single_mean = agg[2];
    CHECK(single_mean.method == "random");
    CHECK(single_mean.seeds == 1);
    CHECK(single_mean.cloaked_acc == Catch::Approx(75.0));
    const AggregateRow& single_std = agg[3];
    CHECK(single_std.stat == "std");
    CHECK(single_std.clean_acc == 0.0);
    CHECK(single_std.cloaked_acc == 0.0);
}

TEST_CASE("drop is exactly clean minus cloaked in every produced row") {
    CloakReport report;
    for (std::uint64_t s = 1; s <= 5; ++s)
        report.rows.push_back(make_row("eminf", s, 80.0 + s, 20.0 + 2.0 * s));
    for (const ReportRow& r : report.rows) CHECK(r.drop == r.clean_acc - r.cloaked_acc);
    std::vector<AggregateRow> agg = aggregate_report(report);
    CHECK(agg[0].drop == Catch::Approx(agg[0].clean_acc - agg[0].cloaked_acc));
}

TEST_CASE("csv output is RFC 4180 with CRLF, quoting, and stable ordering") {
    gctest::TempDir dir("csv");
    CloakReport report;
    report.rows.push_back(make_row("emins", 2, 80.0, 30.0));
    report.rows.push_back(make_row("emins", 1, 82.0, 31.0));
    ReportRow nasty = make_row("random", 1, 70.0, 60.0);
    nasty.dataset = "WE,IRD \"NAME\"";
    report.rows.push_back(nasty);

    auto path = dir.path / "report.csv";
    write_report_csv(report, path);
    std::string text = slurp(path);

    CHECK(text.find("\r\n") != std::string::npos);
    CHECK(text.find("\"WE,IRD \"\"NAME\"\"\"") != std::string::npos);

    std::vector<std::vector<std::string>> rows = parse_csv(text);
    REQUIRE(rows.size() == 1 + 3 + 4);  // header, 3 seed rows, 2 groups x mean/std
    CHECK(rows[0][0] == "schema_version");
    CHECK(rows[0].size() == 16);
    for (size_t i = 1; i < rows.size(); ++i) REQUIRE(rows[i].size() == 16);

    // Seed rows sort by (dataset, method, ..., seed): SYNTH before WE,IRD.
    CHECK(rows[1][1] == "SYNTH");
    CHECK(rows[1][5] == "1");
    CHECK(rows[2][5] == "2");
    CHECK(rows[3][1] == "WE,IRD \"NAME\"");
    CHECK(rows[4][5] == "mean");
    CHECK(rows[5][5] == "std");

    // Round trip of the quoted field through the reader.
    CHECK(rows[3][1] == nasty.dataset);
}

TEST_CASE("csv and json carry numerically identical values") {
    gctest::TempDir dir("reportio");
    CloakReport report;
    report.rows.push_back(make_row("emins", 7, 81.25, 33.333333333333336));
    report.rows.back().cloak_seconds = 0.1234567890123456789;

    auto csv_path = dir.path / "report.csv";
    auto json_path = dir.path / "report.json";
    write_report_csv(report, csv_path);
    write_report_json(report, json_path);

    std::vector<std::vector<std::string>> rows = parse_csv(slurp(csv_path));
    nlohmann::json j = nlohmann::json::parse(slurp(json_path));

    REQUIRE(j["rows"].size() == 1);
    CHECK(j["schema_version"] == 1);
    const auto& jr = j["rows"][0];
    CHECK(std::stod(rows[1][7]) == jr["clean_acc"].get<double>());
    CHECK(std::stod(rows[1][8]) == jr["cloaked_acc"].get<double>());
    CHECK(std::stod(rows[1][13]) == jr["cloak_seconds"].get<double>());
    CHECK(rows[1][12] == jr["budget_histogram"].get<std::string>());
    CHECK(rows[1][15] == jr["config_hash"].get<std::string>());
    CHECK(j["aggregates"].size() == 2);
}

TEST_CASE("empty report writes just the header and an empty json skeleton") {
    gctest::TempDir dir("empty");
    CloakReport report;
    auto path = dir.path / "report.csv";
    write_report_csv(report, path);
    std::vector<std::vector<std::string>> rows = parse_csv(slurp(path));
    REQUIRE(rows.size() == 1);
    CHECK(rows[0][15] == "config_hash");

    nlohmann::json j = report_to_json(report);
    CHECK(j["rows"].empty());
    CHECK(j["aggregates"].empty());
}

TEST_CASE("the csv reader handles quoted newlines and escaped quotes") {
    std::string text = "a,\"line\r\nbreak\",\"say \"\"hi\"\"\"\r\nplain,2,3\r\n";
    std::vector<std::vector<std::string>> rows = parse_csv(text);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][0] == "a");
    CHECK(rows[0][1] == "line\r\nbreak");
    CHECK(rows[0][2] == "say \"hi\"");
    CHECK(rows[1][0] == "plain");
}
