#pragma once

#include "graphcloak/common.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace graphcloak {

/// Dimension-wise median of the rows of X. Even row counts average the two
/// central order statistics. Ties are resolved by original row index so the
/// result (and the subgradient routing in soft_median_vjp) is deterministic.
inline Vector row_median(const Matrix& x) {
    const Eigen::Index m = x.rows(), d = x.cols();
    Vector med(d);
    std::vector<int> order(m);
    for (Eigen::Index j = 0; j < d; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return x(a, j) != x(b, j) ? x(a, j) < x(b, j) : a < b;
        });
        if (m % 2 == 1) {
            med(j) = x(order[m / 2], j);
        } else {
            med(j) = 0.5 * (x(order[m / 2 - 1], j) + x(order[m / 2], j));
        }
    }
    return med;
}

/// Softmax weights of the soft median: w = softmax(-c / (T sqrt(d))) where
/// c_i is the Euclidean distance from row i to the dimension-wise median.
/// Always a probability vector; T -> 0 concentrates on the row closest to the
/// median, T -> inf approaches uniform (the plain mean).
inline Vector soft_median_weights(const Matrix& x, double temperature) {
    if (x.rows() == 0) throw std::invalid_argument("soft median of empty message set");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    const Eigen::Index m = x.rows();
    const double scale = temperature * std::sqrt(static_cast<double>(x.cols()));
    Vector med = row_median(x);
    Vector t(m);
    for (Eigen::Index i = 0; i < m; ++i) t(i) = -(med.transpose() - x.row(i)).norm() / scale;
    double mx = t.maxCoeff();
    Vector w = (t.array() - mx).exp();
    return w / w.sum();
}

/// Weighted mean of the rows of X under the soft-median weights.
inline Vector soft_median_aggregate(const Matrix& x, double temperature) {
    Vector w = soft_median_weights(x, temperature);
    return x.transpose() * w;
}

/// Exact vector-Jacobian product of soft_median_aggregate with respect to X.
/// `upstream` is dL/d(output). Gradient flows through the weighted sum, the
/// softmax weights, the distances c_i, and the median itself (subgradient:
/// routed to the order statistic(s) selected in row_median, half each when m
/// is even; zero at c_i = 0 kinks).
inline Matrix soft_median_vjp(const Matrix& x, double temperature, const Vector& upstream) {
    if (x.rows() == 0) throw std::invalid_argument("soft median of empty message set");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    const Eigen::Index m = x.rows(), d = x.cols();
    const double scale = temperature * std::sqrt(static_cast<double>(d));

    Vector med = row_median(x);
    Vector c(m), t(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        c(i) = (med.transpose() - x.row(i)).norm();
        t(i) = -c(i) / scale;
    }
    double mx = t.maxCoeff();
    Vector w = (t.array() - mx).exp();
    w /= w.sum();

    Matrix grad = Matrix::Zero(m, d);

    // out = X^T w: direct path.
    for (Eigen::Index i = 0; i < m; ++i) grad.row(i) += w(i) * upstream.transpose();

    // Path through w. s_i = upstream . x_i; softmax VJP; then t_i = -c_i/scale.
    Vector s = x * upstream;
    double s_bar = w.dot(s);
    Vector d_t = w.array() * (s.array() - s_bar);
    Vector d_c = -d_t / scale;

    // c_i = ||med - x_i||. Unit direction is zero at the kink c_i = 0.
    Vector d_med = Vector::Zero(d);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (c(i) == 0.0) continue;
        Vector diff = med - x.row(i).transpose();
        grad.row(i) -= (d_c(i) / c(i)) * diff.transpose();
        d_med += (d_c(i) / c(i)) * diff;
    }

    // Median subgradient: route d_med(j) to the selected order statistic(s).
    std::vector<int> order(m);
    for (Eigen::Index j = 0; j < d; ++j) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return x(a, j) != x(b, j) ? x(a, j) < x(b, j) : a < b;
        });
        if (m % 2 == 1) {
            grad(order[m / 2], j) += d_med(j);
        } else {
            grad(order[m / 2 - 1], j) += 0.5 * d_med(j);
            grad(order[m / 2], j) += 0.5 * d_med(j);
        }
    }
    return grad;
}

}  // namespace graphcloak
