#include "funcdiff/stats.hpp"

#include <cmath>
#include <sstream>

namespace funcdiff {

Eigen::VectorXd pointwise_mean(const FunctionalDataset& dataset) {
    const Eigen::VectorXd& grid = dataset.common_grid();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(grid.size());
    for (const auto& f : dataset.functions) {
        mean += f.values;
    }
    return mean / static_cast<double>(dataset.functions.size());
}

Eigen::VectorXd pointwise_var(const FunctionalDataset& dataset) {
    dataset.common_grid();
    const std::size_t nf = dataset.functions.size();
    if (nf < 2) {
        throw std::invalid_argument("pointwise_var: need at least two curves");
    }
    const Eigen::VectorXd mean = pointwise_mean(dataset);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(mean.size());
    for (const auto& f : dataset.functions) {
        acc += (f.values - mean).cwiseAbs2();
    }
    return acc / static_cast<double>(nf - 1);
}

Autocorrelation mean_autocorrelation(const FunctionalDataset& dataset, int max_lag) {
    const Eigen::VectorXd& grid = dataset.common_grid();
    const Eigen::Index n = grid.size();
    if (max_lag < 0 || max_lag >= n) {
        throw std::invalid_argument("mean_autocorrelation: max_lag must lie in [0, grid size)");
    }
    if (n >= 2) {
        const double h = (grid(n - 1) - grid(0)) / static_cast<double>(n - 1);
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            if (std::abs(grid(i + 1) - grid(i) - h) > 1e-8 * std::abs(h)) {
                throw std::invalid_argument("mean_autocorrelation: grid is not uniform");
            }
        }
    }
    Autocorrelation out;
    out.rho = Eigen::VectorXd::Zero(max_lag + 1);
    for (const auto& f : dataset.functions) {
        const Eigen::VectorXd v = f.values.array() - f.values.mean();
        const double denom = v.squaredNorm();
        if (denom == 0.0) {
            out.rho(0) += 1.0;
            ++out.degenerate_count;
            continue;
        }
        for (int lag = 0; lag <= max_lag; ++lag) {
            out.rho(lag) += v.head(n - lag).dot(v.tail(n - lag)) / denom;
        }
    }
    out.rho /= static_cast<double>(dataset.functions.size());
    return out;
}

double smoothness(const FunctionalDataset& dataset) {
    const Eigen::VectorXd& grid = dataset.common_grid();
    if (grid.size() < 3) {
        throw GridTooSmall("smoothness: need at least 3 grid points");
    }
    const Eigen::MatrixXd d = fd_operator(grid);
    double total = 0.0;
    for (const auto& f : dataset.functions) {
        const Eigen::VectorXd deriv = d * f.values;
        const Eigen::ArrayXd centered = deriv.array() - deriv.mean();
        total += std::sqrt(centered.square().mean());
    }
    return total / static_cast<double>(dataset.functions.size());
}

double stat_mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("stat_mse: length mismatch");
    }
    if (a.size() == 0) {
        throw std::invalid_argument("stat_mse: empty input");
    }
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

}  // namespace funcdiff
