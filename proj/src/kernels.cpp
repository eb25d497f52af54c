#include "funcdiff/kernels.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace funcdiff {

namespace {
constexpr double kSqrt3 = 1.7320508075688772;
}

const char* kernel_family_name(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "se";
        case KernelFamily::Matern12: return "matern12";
        case KernelFamily::Matern32: return "matern32";
    }
    throw std::invalid_argument("kernel_family_name: unknown family");
}

KernelFamily kernel_family_from_name(const std::string& name) {
    if (name == "se") return KernelFamily::SquaredExponential;
    if (name == "matern12") return KernelFamily::Matern12;
    if (name == "matern32") return KernelFamily::Matern32;
    throw std::invalid_argument("unknown kernel family '" + name +
                                "' (expected se, matern12 or matern32)");
}

KernelSpec::KernelSpec(KernelFamily family_, double lengthscale_, double variance_)
    : family(family_), lengthscale(lengthscale_), variance(variance_) {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
        throw std::invalid_argument("KernelSpec: lengthscale must be positive");
    }
    if (!(variance > 0.0) || !std::isfinite(variance)) {
        throw std::invalid_argument("KernelSpec: variance must be positive");
    }
}

DiscretizedFunction::DiscretizedFunction(Eigen::VectorXd grid_, Eigen::VectorXd values_)
    : grid(std::move(grid_)), values(std::move(values_)) {
    if (grid.size() == 0) {
        throw GridTooSmall("DiscretizedFunction: empty grid");
    }
    if (grid.size() != values.size()) {
        std::ostringstream os;
        os << "DiscretizedFunction: grid has " << grid.size() << " points but "
           << values.size() << " values";
        throw std::invalid_argument(os.str());
    }
    check_strictly_increasing(grid, "DiscretizedFunction");
}

double eval(const KernelSpec& spec, double x1, double x2) {
    const double d = x1 - x2;
    const double l = spec.lengthscale;
    switch (spec.family) {
        case KernelFamily::SquaredExponential:
            return spec.variance * std::exp(-d * d / (2.0 * l * l));
        case KernelFamily::Matern12:
            return spec.variance * std::exp(-std::abs(d) / l);
        case KernelFamily::Matern32: {
            const double s = kSqrt3 * std::abs(d) / l;
            return spec.variance * (1.0 + s) * std::exp(-s);
        }
    }
    throw std::invalid_argument("eval: unknown kernel family");
}

double eval_dx2(const KernelSpec& spec, double x1, double x2) {
    const double d = x1 - x2;
    const double l = spec.lengthscale;
    switch (spec.family) {
        case KernelFamily::SquaredExponential:
            return eval(spec, x1, x2) * d / (l * l);
        case KernelFamily::Matern12:
            throw NonDifferentiableKernel(
                "eval_dx2: Matern-1/2 sample paths are not differentiable");
        case KernelFamily::Matern32:
            return spec.variance * (3.0 / (l * l)) * d *
                   std::exp(-kSqrt3 * std::abs(d) / l);
    }
    throw std::invalid_argument("eval_dx2: unknown kernel family");
}

SymMatrix gram(const KernelSpec& spec, const Eigen::VectorXd& grid) {
    const Eigen::Index n = grid.size();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        k(i, i) = eval(spec, grid(i), grid(i));
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = eval(spec, grid(i), grid(j));
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return SymMatrix::from_symmetric(std::move(k));
}

Eigen::MatrixXd gram_dx2(const KernelSpec& spec, const Eigen::VectorXd& grid) {
    const Eigen::Index n = grid.size();
    Eigen::MatrixXd kp(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kp(i, j) = eval_dx2(spec, grid(i), grid(j));
        }
    }
    return kp;
}

namespace {
Eigen::VectorXd checked_grid(Eigen::VectorXd grid) {
    check_strictly_increasing(grid, "GpSampler");
    return grid;
}
}  // namespace

GpSampler::GpSampler(const KernelSpec& spec, Eigen::VectorXd grid)
    : grid_(checked_grid(std::move(grid))), factor_(gram(spec, grid_)) {}

DiscretizedFunction GpSampler::draw(Rng& rng) const {
    Eigen::VectorXd z(grid_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = rng.normal();
    }
    return DiscretizedFunction(grid_, factor_.lower_times(z));
}

DiscretizedFunction sample_gp(const KernelSpec& spec, const Eigen::VectorXd& grid, Rng& rng) {
    return GpSampler(spec, grid).draw(rng);
}

DiscretizedFunction sample_gp(const KernelSpec& spec, const DiscretizedFunction& mean, Rng& rng) {
    DiscretizedFunction f = GpSampler(spec, mean.grid).draw(rng);
    f.values += mean.values;
    return f;
}

GpPosterior gp_regress(const KernelSpec& spec,
                       const DiscretizedFunction& observations,
                       double noise_var,
                       const Eigen::VectorXd& query_grid) {
    if (noise_var < 0.0) {
        throw std::invalid_argument("gp_regress: noise_var must be non-negative");
    }
    check_strictly_increasing(query_grid, "gp_regress");
    const Eigen::Index no = observations.size();
    const Eigen::Index nq = query_grid.size();

    Eigen::MatrixXd koo = gram(spec, observations.grid).mat();
    koo.diagonal().array() += noise_var;
    const SpdFactor factor(SymMatrix::from_symmetric(std::move(koo)));

    Eigen::MatrixXd kqo(nq, no);
    for (Eigen::Index i = 0; i < nq; ++i) {
        for (Eigen::Index j = 0; j < no; ++j) {
            kqo(i, j) = eval(spec, query_grid(i), observations.grid(j));
        }
    }

    GpPosterior post;
    post.mean = DiscretizedFunction(query_grid, kqo * factor.solve(observations.values));
    const Eigen::MatrixXd cross = factor.solve(Eigen::MatrixXd(kqo.transpose()));
    post.std.resize(nq);
    for (Eigen::Index i = 0; i < nq; ++i) {
        const double var = eval(spec, query_grid(i), query_grid(i)) -
                           kqo.row(i).dot(cross.col(i));
        post.std(i) = std::sqrt(std::max(var, 0.0));
    }
    return post;
}

}  // namespace funcdiff
