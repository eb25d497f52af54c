#pragma once

#include <string>
#include <vector>

#include "funcdiff/kernels.hpp"
#include "funcdiff/numerics.hpp"
#include "funcdiff/rng.hpp"

namespace funcdiff {

// Curves may live on different grids; operations that need a shared grid
// check for one.
struct FunctionalDataset {
    std::vector<DiscretizedFunction> functions;
    std::string name;

    std::size_t size() const { return functions.size(); }
    // The common grid, or GridMismatch if the curves disagree.
    const Eigen::VectorXd& common_grid() const;
};

// Equal-weight two-component GP mixture: means 10x-5 and -10x+5, squared
// exponential kernel with variance 0.4 and lengthscale 0.1.
FunctionalDataset gen_mogp(int n_functions, const Eigen::VectorXd& grid, Rng& rng);

// Random affine curves a*x + b, a ~ N(2, 0.25^2), b ~ N(-1, 0.07^2).
FunctionalDataset gen_linear(int n_functions, const Eigen::VectorXd& grid, Rng& rng);

// CSV schema: header "function_id,x,y"; one row per observation; rows of one
// function_id form one curve sorted by x. Round-trips losslessly.
FunctionalDataset load_csv(const std::string& path);
void save_csv(const FunctionalDataset& dataset, const std::string& path);

struct FpcaModel {
    Eigen::VectorXd grid;
    Eigen::VectorXd mean_curve;
    Eigen::MatrixXd components;        // n x M, quadrature-orthonormal columns
    Eigen::VectorXd score_mean;        // M
    SymMatrix score_cov = SymMatrix::zero(0);
};

// Principal components of the centered sample covariance under 1/n
// quadrature, plus a Gaussian fit (mean and full covariance) to the scores.
FpcaModel fpca_fit(const FunctionalDataset& dataset, int n_components);

// Draw scores from the fitted Gaussian and reconstruct curves. The score
// covariance may be singular (e.g. identical training curves), so the
// sampling transform is a clipped spectral factor rather than a Cholesky.
FunctionalDataset fpca_sample(const FpcaModel& model, int n_functions, Rng& rng);

}  // namespace funcdiff
