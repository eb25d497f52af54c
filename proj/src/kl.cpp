#include "funcdiff/kl.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace funcdiff {

double kl_l2(const Eigen::VectorXd& dm, const SymMatrix& k) {
    if (dm.size() != k.n()) {
        throw std::invalid_argument("kl_l2: dm size does not match covariance");
    }
    const double q = dm.dot(solve_spd_auto(k, dm));
    return 0.5 * std::max(q, 0.0);
}

SymMatrix sobolev_form(const SymMatrix& k, const Eigen::MatrixXd& kp,
                       const Eigen::MatrixXd& d) {
    const Eigen::Index n = k.n();
    if (kp.rows() != n || kp.cols() != n || d.rows() != n || d.cols() != n) {
        throw std::invalid_argument("sobolev_form: dimension mismatch");
    }
    const Eigen::MatrixXd inv = solve_square_auto(
        k.mat() + kp * d, Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd form =
        (Eigen::MatrixXd::Identity(n, n) + d.transpose() * d) * inv;
    return nearest_psd(form);
}

double kl_sobolev(const Eigen::VectorXd& dm, const SymMatrix& a) {
    if (dm.size() != a.n()) {
        throw std::invalid_argument("kl_sobolev: dm size does not match form");
    }
    return 0.5 * std::max(dm.dot(a.mat() * dm), 0.0);
}

double kl_spectral(const Eigen::VectorXd& dm, const SymMatrix& k, int j_terms) {
    const Eigen::Index n = k.n();
    if (dm.size() != n) {
        throw std::invalid_argument("kl_spectral: dm size does not match covariance");
    }
    if (j_terms < 1 || j_terms > n) {
        throw std::invalid_argument("kl_spectral: J must lie in [1, n]");
    }
    // Operator discretization: eigenpairs of n^{-1} K; eigenfunction samples
    // are sqrt(n) * eigenvector entries, inner products carry weight 1/n.
    const SymEig eig = sym_eig(SymMatrix::from_symmetric(k.mat() / static_cast<double>(n)));
    const double lambda_max = eig.values.size() > 0 ? eig.values(0) : 0.0;
    const double cutoff = 1e-12 * std::max(lambda_max, 0.0);
    double total = 0.0;
    for (int j = 0; j < j_terms; ++j) {
        const double lambda = eig.values(j);
        if (!(lambda > cutoff)) {
            continue;
        }
        // <dm, e_j> with e_j(x_i) = sqrt(n) Phi_ij and 1/n quadrature.
        const double coeff = eig.vectors.col(j).dot(dm) / std::sqrt(static_cast<double>(n));
        total += coeff * coeff / lambda;
    }
    return 0.5 * total;
}

const char* space_variant_name(SpaceVariant v) {
    switch (v) {
        case SpaceVariant::L2: return "l2";
        case SpaceVariant::SobolevH1: return "sobolev";
    }
    throw std::invalid_argument("space_variant_name: unknown variant");
}

SpaceVariant space_variant_from_name(const std::string& name) {
    if (name == "l2") return SpaceVariant::L2;
    if (name == "sobolev") return SpaceVariant::SobolevH1;
    throw std::invalid_argument("unknown space variant '" + name +
                                "' (expected l2 or sobolev)");
}

SpaceNorm SpaceNorm::make(SpaceVariant variant, const KernelSpec& noise,
                          const Eigen::VectorXd& grid) {
    check_strictly_increasing(grid, "SpaceNorm");
    SpaceNorm norm(variant, grid);
    const SymMatrix k = gram(noise, grid);
    if (variant == SpaceVariant::L2) {
        norm.factor_.emplace(k);
    } else {
        const Eigen::MatrixXd kp = gram_dx2(noise, grid);
        const Eigen::MatrixXd d = fd_operator(grid);
        norm.form_.emplace(sobolev_form(k, kp, d));
    }
    return norm;
}

Eigen::VectorXd SpaceNorm::apply(const Eigen::VectorXd& v) const {
    if (v.size() != grid_.size()) {
        throw std::invalid_argument("SpaceNorm::apply: size mismatch");
    }
    if (variant_ == SpaceVariant::L2) {
        return factor_->solve(v);
    }
    return form_->mat() * v;
}

double SpaceNorm::quad(const Eigen::VectorXd& v) const {
    return std::max(v.dot(apply(v)), 0.0);
}

const SymMatrix& SpaceNorm::form_matrix() const {
    if (!form_) {
        throw std::logic_error("SpaceNorm::form_matrix: only available for SobolevH1");
    }
    return *form_;
}

}  // namespace funcdiff
