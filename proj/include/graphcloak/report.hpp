#pragma once

#include "graphcloak/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace graphcloak {

/// One experiment cell: a (dataset, method, surrogate, victim, seed) run at a
/// given poison rate. `drop` is always clean_acc - cloaked_acc for the same
/// seed. Accuracies are fractions in [0,1] scaled to percentage points.
struct ReportRow {
    std::string dataset;
    std::string method;
    std::string surrogate;  // empty for surrogate-free methods
    std::string victim;
    std::uint64_t seed = 0;
    double poison_rate = 1.0;
    double clean_acc = 0.0;
    double cloaked_acc = 0.0;
    double drop = 0.0;
    double delta_edges_pct = 0.0;
    double delta_density_pct = 0.0;
    std::string budget_histogram;  // "used:count" pairs, ';'-joined, ascending
    double cloak_seconds = 0.0;
    double train_seconds = 0.0;
    std::string config_hash;
};

/// mean / sample-std (n-1) summary over the seeds of one cell group.
struct AggregateRow {
    std::string dataset, method, surrogate, victim;
    double poison_rate = 1.0;
    std::string stat;  // "mean" or "std"
    int seeds = 0;
    double clean_acc = 0.0, cloaked_acc = 0.0, drop = 0.0;
    double delta_edges_pct = 0.0, delta_density_pct = 0.0;
    double cloak_seconds = 0.0, train_seconds = 0.0;
};

struct CloakReport {
    int schema_version = 1;
    std::vector<ReportRow> rows;
};

inline std::string budget_histogram_string(const std::vector<long>& used) {
    std::map<long, long> hist;
    for (long u : used) ++hist[u];
    std::string out;
    for (auto& [value, count] : hist) {
        if (!out.empty()) out += ";";
        out += std::to_string(value) + ":" + std::to_string(count);
    }
    return out;
}

namespace detail {

inline bool row_key_less(const ReportRow& a, const ReportRow& b) {
    auto ka = std::tie(a.dataset, a.method, a.surrogate, a.victim, a.poison_rate, a.seed);
    auto kb = std::tie(b.dataset, b.method, b.surrogate, b.victim, b.poison_rate, b.seed);
    return ka < kb;
}

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

}  // namespace detail

/// Rows grouped by (dataset, method, surrogate, victim, poison_rate); each
/// group yields a mean row and a sample-standard-deviation row (std 0 for
/// singleton groups).
inline std::vector<AggregateRow> aggregate_report(const CloakReport& report) {
    std::vector<ReportRow> rows = report.rows;
    std::sort(rows.begin(), rows.end(), detail::row_key_less);
    std::vector<AggregateRow> out;
    size_t i = 0;
    while (i < rows.size()) {
        size_t j = i;
        while (j < rows.size() && rows[j].dataset == rows[i].dataset &&
               rows[j].method == rows[i].method && rows[j].surrogate == rows[i].surrogate &&
               rows[j].victim == rows[i].victim && rows[j].poison_rate == rows[i].poison_rate)
            ++j;
        int n = static_cast<int>(j - i);
        auto stat_pair = [&](auto getter) {
            double mean = 0.0;
            for (size_t k = i; k < j; ++k) mean += getter(rows[k]);
            mean /= n;
            double var = 0.0;
            if (n > 1) {
                for (size_t k = i; k < j; ++k) {
                    double d = getter(rows[k]) - mean;
                    var += d * d;
                }
                var /= (n - 1);
            }
            return std::pair<double, double>(mean, std::sqrt(var));
        };
        auto [m_clean, s_clean] = stat_pair([](const ReportRow& r) { return r.clean_acc; });
        auto [m_cloak, s_cloak] = stat_pair([](const ReportRow& r) { return r.cloaked_acc; });
        auto [m_drop, s_drop] = stat_pair([](const ReportRow& r) { return r.drop; });
        auto [m_de, s_de] = stat_pair([](const ReportRow& r) { return r.delta_edges_pct; });
        auto [m_dd, s_dd] = stat_pair([](const ReportRow& r) { return r.delta_density_pct; });
        auto [m_ct, s_ct] = stat_pair([](const ReportRow& r) { return r.cloak_seconds; });
        auto [m_tt, s_tt] = stat_pair([](const ReportRow& r) { return r.train_seconds; });
        for (int which = 0; which < 2; ++which) {
            AggregateRow a;
            a.dataset = rows[i].dataset;
            a.method = rows[i].method;
            a.surrogate = rows[i].surrogate;
            a.victim = rows[i].victim;
            a.poison_rate = rows[i].poison_rate;
            a.seeds = n;
            a.stat = which == 0 ? "mean" : "std";
            a.clean_acc = which == 0 ? m_clean : s_clean;
            a.cloaked_acc = which == 0 ? m_cloak : s_cloak;
            a.drop = which == 0 ? m_drop : s_drop;
            a.delta_edges_pct = which == 0 ? m_de : s_de;
            a.delta_density_pct = which == 0 ? m_dd : s_dd;
            a.cloak_seconds = which == 0 ? m_ct : s_ct;
            a.train_seconds = which == 0 ? m_tt : s_tt;
            out.push_back(a);
        }
        i = j;
    }
    return out;
}

/// RFC 4180 CSV: CRLF line endings, quoting only where required. Per-seed
/// rows first (sorted for byte-stable output), then the aggregate rows with
/// "mean"/"std" in the seed column.
inline void write_report_csv(const CloakReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report " + path.string());
    out << "schema_version,dataset,method,surrogate,victim,seed,poison_rate,clean_acc,"
           "cloaked_acc,drop,delta_edges_pct,delta_density_pct,budget_histogram,"
           "cloak_seconds,train_seconds,config_hash\r\n";
    std::vector<ReportRow> rows = report.rows;
    std::sort(rows.begin(), rows.end(), detail::row_key_less);
    for (const ReportRow& r : rows) {
        out << report.schema_version << "," << detail::csv_field(r.dataset) << ","
            << detail::csv_field(r.method) << "," << detail::csv_field(r.surrogate) << ","
            << detail::csv_field(r.victim) << "," << r.seed << "," << detail::fmt(r.poison_rate)
            << "," << detail::fmt(r.clean_acc) << "," << detail::fmt(r.cloaked_acc) << ","
            << detail::fmt(r.drop) << "," << detail::fmt(r.delta_edges_pct) << ","
            << detail::fmt(r.delta_density_pct) << "," << detail::csv_field(r.budget_histogram)
            << "," << detail::fmt(r.cloak_seconds) << "," << detail::fmt(r.train_seconds) << ","
            << detail::csv_field(r.config_hash) << "\r\n";
    }
    for (const AggregateRow& a : aggregate_report(report)) {
        out << report.schema_version << "," << detail::csv_field(a.dataset) << ","
            << detail::csv_field(a.method) << "," << detail::csv_field(a.surrogate) << ","
            << detail::csv_field(a.victim) << "," << a.stat << "," << detail::fmt(a.poison_rate)
            << "," << detail::fmt(a.clean_acc) << "," << detail::fmt(a.cloaked_acc) << ","
            << detail::fmt(a.drop) << "," << detail::fmt(a.delta_edges_pct) << ","
            << detail::fmt(a.delta_density_pct) << ",," << detail::fmt(a.cloak_seconds) << ","
            << detail::fmt(a.train_seconds) << ",\r\n";
    }
}

inline nlohmann::json report_to_json(const CloakReport& report) {
    std::vector<ReportRow> rows = report.rows;
    std::sort(rows.begin(), rows.end(), detail::row_key_less);
    nlohmann::json j;
    j["schema_version"] = report.schema_version;
    j["rows"] = nlohmann::json::array();
    for (const ReportRow& r : rows) {
        j["rows"].push_back({{"dataset", r.dataset},
                             {"method", r.method},
                             {"surrogate", r.surrogate},
                             {"victim", r.victim},
                             {"seed", r.seed},
                             {"poison_rate", r.poison_rate},
                             {"clean_acc", r.clean_acc},
                             {"cloaked_acc", r.cloaked_acc},
                             {"drop", r.drop},
                             {"delta_edges_pct", r.delta_edges_pct},
                             {"delta_density_pct", r.delta_density_pct},
                             {"budget_histogram", r.budget_histogram},
                             {"cloak_seconds", r.cloak_seconds},
                             {"train_seconds", r.train_seconds},
                             {"config_hash", r.config_hash}});
    }
    j["aggregates"] = nlohmann::json::array();
    for (const AggregateRow& a : aggregate_report(report)) {
        j["aggregates"].push_back({{"dataset", a.dataset},
                                   {"method", a.method},
                                   {"surrogate", a.surrogate},
                                   {"victim", a.victim},
                                   {"poison_rate", a.poison_rate},
                                   {"stat", a.stat},
                                   {"seeds", a.seeds},
                                   {"clean_acc", a.clean_acc},
                                   {"cloaked_acc", a.cloaked_acc},
                                   {"drop", a.drop},
                                   {"delta_edges_pct", a.delta_edges_pct},
                                   {"delta_density_pct", a.delta_density_pct},
                                   {"cloak_seconds", a.cloak_seconds},
                                   {"train_seconds", a.train_seconds}});
    }
    return j;
}

inline void write_report_json(const CloakReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report " + path.string());
    out << report_to_json(report).dump(2) << "\n";
}

/// Minimal RFC 4180 reader (quotes, escaped quotes, CRLF); used by tests and
/// the CLI to show report summaries.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    size_t i = 0;
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&]() {
        end_field();
        rows.push_back(row);
        row.clear();
    };
    while (i < text.size()) {
        char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                field += '"';
                i += 2;
                continue;
            }
            if (c == '"') {
                quoted = false;
                ++i;
                continue;
            }
            field += c;
            ++i;
        } else {
            if (c == '"' && field.empty()) {
                quoted = true;
                ++i;
            } else if (c == ',') {
                end_field();
                ++i;
            } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
                end_row();
                i += 2;
            } else if (c == '\n') {
                end_row();
                ++i;
            } else {
                field += c;
                ++i;
            }
        }
    }
    if (!field.empty() || !row.empty()) end_row();
    return rows;
}

}  // namespace graphcloak
