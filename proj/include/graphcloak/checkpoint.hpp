#pragma once

#include "graphcloak/gnn.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace graphcloak {

namespace detail {

inline void write_values(std::ostream& out, const double* data, Eigen::Index n) {
    char buf[40];
    for (Eigen::Index i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", data[i]);
        out << buf << (i + 1 < n ? " " : "");
    }
    out << "\n";
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    out << "array " << m.rows() << " " << m.cols() << "\n";
    char buf[40];
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            out << buf << ((r + 1 == m.rows() && c + 1 == m.cols()) ? "\n" : " ");
        }
}

inline Matrix read_matrix(std::istream& in) {
    std::string tag;
    Eigen::Index rows = 0, cols = 0;
    if (!(in >> tag >> rows >> cols) || tag != "array")
        throw std::runtime_error("checkpoint: expected parameter array");
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            if (!(in >> m(r, c))) throw std::runtime_error("checkpoint: truncated array");
    return m;
}

}  // namespace detail

/// Text checkpoint, version 1: header lines (key value), then each parameter
/// array in canonical order as "array <rows> <cols>" followed by row-major
/// values printed with 17 significant digits (exact double round trip).
inline std::string serialize_checkpoint(const GnnModel& m) {
    std::ostringstream out;
    out << "graphcloak-checkpoint 1\n";
    out << "arch " << arch_name(m.arch) << "\n";
    out << "input_dim " << m.input_dim << "\n";
    out << "hidden_dim " << m.hidden_dim << "\n";
    out << "class_count " << m.class_count << "\n";
    out << "conv_layers " << m.conv_layers << "\n";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", m.gin_epsilon);
    out << "gin_epsilon " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", m.dropout_rate);
    out << "dropout_rate " << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", m.soft_median_temperature);
    out << "soft_median_temperature " << buf << "\n";
    for (int l = 0; l < m.conv_layers; ++l) {
        detail::write_matrix(out, m.conv[l].weight);
        if (m.arch == Arch::SAGE) detail::write_matrix(out, m.sage_neigh[l]);
        detail::write_matrix(out, Matrix(m.conv[l].bias.transpose()));
        if (m.arch == Arch::GIN) {
            detail::write_matrix(out, m.gin2[l].weight);
            detail::write_matrix(out, Matrix(m.gin2[l].bias.transpose()));
        }
    }
    detail::write_matrix(out, m.head_hidden.weight);
    detail::write_matrix(out, Matrix(m.head_hidden.bias.transpose()));
    detail::write_matrix(out, m.head_out.weight);
    detail::write_matrix(out, Matrix(m.head_out.bias.transpose()));
    return out.str();
}

inline GnnModel parse_checkpoint(const std::string& text) {
    std::istringstream in(text);
    std::string magic, key, arch_s;
    int version = 0;
    if (!(in >> magic >> version) || magic != "graphcloak-checkpoint")
        throw std::runtime_error("not a graphcloak checkpoint");
    if (version != 1) throw std::runtime_error("unsupported checkpoint version");
    GnnModel m;
    auto expect = [&](const char* name) {
        if (!(in >> key) || key != name)
            throw std::runtime_error(std::string("checkpoint: expected field ") + name);
    };
    expect("arch");
    in >> arch_s;
    m.arch = arch_from_name(arch_s);
    expect("input_dim");
    in >> m.input_dim;
    expect("hidden_dim");
    in >> m.hidden_dim;
    expect("class_count");
    in >> m.class_count;
    expect("conv_layers");
    in >> m.conv_layers;
    expect("gin_epsilon");
    in >> m.gin_epsilon;
    expect("dropout_rate");
    in >> m.dropout_rate;
    expect("soft_median_temperature");
    in >> m.soft_median_temperature;
    if (!in) throw std::runtime_error("checkpoint: malformed header");

    for (int l = 0; l < m.conv_layers; ++l) {
        DenseLayer layer;
        layer.weight = detail::read_matrix(in);
        if (m.arch == Arch::SAGE) m.sage_neigh.push_back(detail::read_matrix(in));
        layer.bias = detail::read_matrix(in).transpose();
        if (m.arch == Arch::GIN) {
            DenseLayer g2;
            g2.weight = detail::read_matrix(in);
            g2.bias = detail::read_matrix(in).transpose();
            m.gin2.push_back(g2);
        }
        m.conv.push_back(layer);
    }
    m.head_hidden.weight = detail::read_matrix(in);
    m.head_hidden.bias = detail::read_matrix(in).transpose();
    m.head_out.weight = detail::read_matrix(in);
    m.head_out.bias = detail::read_matrix(in).transpose();
    return m;
}

inline void save_checkpoint(const GnnModel& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << serialize_checkpoint(m);
}

inline GnnModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("missing checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str());
}

/// FNV-1a over the serialized bytes; recorded in cloak manifests so a cloaked
/// dataset can be traced to the exact surrogate that produced it.
inline std::string checkpoint_hash(const GnnModel& m) {
    std::string s = serialize_checkpoint(m);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s.data(), s.size())));
    return buf;
}

}  // namespace graphcloak
