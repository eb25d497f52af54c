#pragma once

#include <Eigen/Dense>

#include "funcdiff/errors.hpp"
#include "funcdiff/numerics.hpp"
#include "funcdiff/rng.hpp"

namespace funcdiff {

enum class KernelFamily { SquaredExponential, Matern12, Matern32 };

const char* kernel_family_name(KernelFamily family);
KernelFamily kernel_family_from_name(const std::string& name);

struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    double lengthscale = 1.0;
    double variance = 1.0;

    KernelSpec() = default;
    KernelSpec(KernelFamily family_, double lengthscale_, double variance_);
};

// A function known through its values on a strictly increasing grid.
struct DiscretizedFunction {
    Eigen::VectorXd grid;
    Eigen::VectorXd values;

    DiscretizedFunction() = default;
    DiscretizedFunction(Eigen::VectorXd grid_, Eigen::VectorXd values_);

    Eigen::Index size() const { return grid.size(); }
};

double eval(const KernelSpec& spec, double x1, double x2);

// Derivative of the kernel in its second argument. Matern-1/2 paths are not
// differentiable, so asking for it is an error rather than a zero.
double eval_dx2(const KernelSpec& spec, double x1, double x2);

// Gram matrix K_ij = k(x_i, x_j); each pair computed once so symmetry is exact.
SymMatrix gram(const KernelSpec& spec, const Eigen::VectorXd& grid);

// Cross-derivative matrix K'_ij = d/dx2 k(x_i, x_j); antisymmetric for the
// stationary kernels here.
Eigen::MatrixXd gram_dx2(const KernelSpec& spec, const Eigen::VectorXd& grid);

// Caches the Gram factorization for repeated zero-mean draws on one grid.
class GpSampler {
public:
    GpSampler(const KernelSpec& spec, Eigen::VectorXd grid);

    DiscretizedFunction draw(Rng& rng) const;
    const Eigen::VectorXd& grid() const { return grid_; }
    double jitter_used() const { return factor_.jitter_used(); }

private:
    Eigen::VectorXd grid_;
    SpdFactor factor_;
};

// Zero-mean draw.
DiscretizedFunction sample_gp(const KernelSpec& spec, const Eigen::VectorXd& grid, Rng& rng);
// Draw around a mean function, on the mean's grid.
DiscretizedFunction sample_gp(const KernelSpec& spec, const DiscretizedFunction& mean, Rng& rng);

struct GpPosterior {
    DiscretizedFunction mean;
    Eigen::VectorXd std;  // pointwise, clipped at zero before the square root
};

// Exact GP conditioning on noisy observations (noise_var >= 0; the jitter
// policy covers the noiseless case when observation points nearly coincide).
GpPosterior gp_regress(const KernelSpec& spec,
                       const DiscretizedFunction& observations,
                       double noise_var,
                       const Eigen::VectorXd& query_grid);

}  // namespace funcdiff
