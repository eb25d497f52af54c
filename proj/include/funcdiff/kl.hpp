#pragma once

#include <optional>

#include "funcdiff/kernels.hpp"
#include "funcdiff/numerics.hpp"

namespace funcdiff {

// 0.5 * dm^T K^{-1} dm: KL between two Gaussians that share the covariance K.
double kl_l2(const Eigen::VectorXd& dm, const SymMatrix& k);

// A = nearest_psd((I + D^T D) (K + Kp D)^{-1}), the discretized quadratic form
// of the H1 inner product against the noise covariance.
SymMatrix sobolev_form(const SymMatrix& k, const Eigen::MatrixXd& kp,
                       const Eigen::MatrixXd& d);

// 0.5 * dm^T A dm with the projected Sobolev form.
double kl_sobolev(const Eigen::VectorXd& dm, const SymMatrix& a);

// Truncated spectral estimator: eigenpairs of the operator n^{-1} K, inner
// products under 1/n quadrature, leading J terms. Eigenvalues below
// 1e-12 * lambda_max are treated as null directions and skipped.
double kl_spectral(const Eigen::VectorXd& dm, const SymMatrix& k, int j_terms);

enum class SpaceVariant { L2, SobolevH1 };

const char* space_variant_name(SpaceVariant v);
SpaceVariant space_variant_from_name(const std::string& name);

// The quadratic form <v, A v> used to weigh residuals during training and
// likelihood evaluation. L2 applies K^{-1} through a cached factorization;
// SobolevH1 caches the projected form matrix.
class SpaceNorm {
public:
    static SpaceNorm make(SpaceVariant variant, const KernelSpec& noise,
                          const Eigen::VectorXd& grid);

    SpaceVariant variant() const { return variant_; }
    const Eigen::VectorXd& grid() const { return grid_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    // v^T A v, clamped at zero against rounding.
    double quad(const Eigen::VectorXd& v) const;
    // KL of equal-covariance Gaussians whose means differ by dm.
    double kl(const Eigen::VectorXd& dm) const { return 0.5 * quad(dm); }

    // SobolevH1 only: the cached form matrix.
    const SymMatrix& form_matrix() const;

private:
    SpaceNorm(SpaceVariant variant, Eigen::VectorXd grid)
        : variant_(variant), grid_(std::move(grid)) {}

    SpaceVariant variant_;
    Eigen::VectorXd grid_;
    std::optional<SpdFactor> factor_;   // L2
    std::optional<SymMatrix> form_;     // SobolevH1
};

}  // namespace funcdiff
