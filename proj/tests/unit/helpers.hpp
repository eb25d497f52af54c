#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "funcdiff/numerics.hpp"
#include "funcdiff/rng.hpp"

namespace testutil {

// Well-conditioned random SPD matrix: A*A^T + n*I keeps the spectrum away
// from zero so factorizations succeed without jitter.
inline funcdiff::SymMatrix random_spd(int n, funcdiff::Rng& rng, double diag_boost = -1.0) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    if (diag_boost < 0.0) diag_boost = static_cast<double>(n);
    Eigen::MatrixXd m = a * a.transpose() + diag_boost * Eigen::MatrixXd::Identity(n, n);
    return funcdiff::SymMatrix::symmetrized(m);
}

inline std::vector<double> random_sorted_grid(int n, funcdiff::Rng& rng, double lo = 0.0,
                                              double hi = 1.0) {
    std::vector<double> g(static_cast<size_t>(n));
    while (true) {
        for (auto& x : g) x = lo + (hi - lo) * rng.uniform();
        std::sort(g.begin(), g.end());
        bool distinct = true;
        for (size_t i = 1; i < g.size(); ++i)
            if (g[i] <= g[i - 1]) distinct = false;
        if (distinct) return g;
    }
}

inline std::vector<double> uniform_grid(int n, double lo = 0.0, double hi = 1.0) {
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        g[static_cast<size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
    return g;
}

// Grids {i/n : i=0..n-1}; for m | n the coarse grid is a subset of the fine one.
inline std::vector<double> left_uniform_grid(int n) {
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = static_cast<double>(i) / n;
    return g;
}

inline Eigen::VectorXd random_vector(int n, funcdiff::Rng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double rel_diff(double a, double b) {
    double denom = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / denom;
}

}  // namespace testutil
