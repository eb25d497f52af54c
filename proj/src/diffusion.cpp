#include "funcdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace funcdiff {

namespace {

// One reverse chain on `grid`. `cond_index[j]` marks where conditioning value
// `cond_value[j]` lives in the grid; empty conditioning takes no overwrite
// branch and consumes exactly the unconditional draw sequence.
DiscretizedFunction reverse_chain(const DenoiserModel& model,
                                  const NoiseSchedule& s,
                                  const KernelSpec& k,
                                  const Eigen::VectorXd& grid,
                                  const std::vector<Eigen::Index>& cond_index,
                                  const Eigen::VectorXd& cond_value,
                                  int n_free,
                                  Rng& rng) {
    const GpSampler sampler(k, grid);
    std::unique_ptr<GpSampler> cond_sampler;
    Eigen::VectorXd cond_grid(cond_index.size());
    if (!cond_index.empty()) {
        for (std::size_t j = 0; j < cond_index.size(); ++j) {
            cond_grid(static_cast<Eigen::Index>(j)) = grid(cond_index[j]);
        }
        cond_sampler = std::make_unique<GpSampler>(k, cond_grid);
    }

    DiscretizedFunction u = sampler.draw(rng);
    for (int t = s.T(); t >= 1; --t) {
        const DiscretizedFunction xi_hat = model.predict(t, u);
        if (xi_hat.grid.size() != grid.size() || xi_hat.grid != grid) {
            throw GridMismatch("sample: model changed the grid");
        }
        const double beta = s.beta(t);
        const double gamma = s.gamma(t);
        Eigen::VectorXd next =
            (u.values - (beta / std::sqrt(1.0 - gamma)) * xi_hat.values) /
            std::sqrt(1.0 - beta);
        if (t >= 2) {
            next += std::sqrt(s.beta_tilde(t)) * sampler.draw(rng).values;
        }
        if (!cond_index.empty() && t > n_free) {
            const Eigen::VectorXd noise = cond_sampler->draw(rng).values;
            for (std::size_t j = 0; j < cond_index.size(); ++j) {
                next(cond_index[j]) =
                    std::sqrt(gamma) * cond_value(static_cast<Eigen::Index>(j)) +
                    std::sqrt(1.0 - gamma) * noise(static_cast<Eigen::Index>(j));
            }
        }
        if (!next.allFinite()) {
            std::ostringstream os;
            os << "sample: non-finite values produced at t = " << t;
            throw Error(os.str());
        }
        u = DiscretizedFunction(grid, std::move(next));
    }
    return u;
}

}  // namespace

DiscretizedFunction sample_unconditional(const DenoiserModel& model,
                                         const NoiseSchedule& s,
                                         const KernelSpec& k,
                                         const Eigen::VectorXd& grid,
                                         Rng& rng) {
    return reverse_chain(model, s, k, grid, {}, Eigen::VectorXd(), 0, rng);
}

DiscretizedFunction sample_conditional(const DenoiserModel& model,
                                       const NoiseSchedule& s,
                                       const KernelSpec& k,
                                       const Eigen::VectorXd& query_grid,
                                       const ConditioningSet& cond,
                                       Rng& rng) {
    if (cond.n_free < 0 || cond.n_free >= s.T()) {
        std::ostringstream os;
        os << "sample_conditional: n_free = " << cond.n_free << " outside [0, T)";
        throw std::invalid_argument(os.str());
    }
    check_strictly_increasing(query_grid, "sample_conditional");
    for (std::size_t a = 0; a < cond.points.size(); ++a) {
        for (std::size_t b = a + 1; b < cond.points.size(); ++b) {
            if (cond.points[a].first == cond.points[b].first) {
                std::ostringstream os;
                os << "sample_conditional: conditioning location "
                   << cond.points[a].first << " appears twice";
                throw DuplicateConditioningPoint(os.str());
            }
        }
    }

    // Augmented support: sorted union, conditioning locations merged with any
    // coinciding query points.
    std::vector<double> support(query_grid.data(), query_grid.data() + query_grid.size());
    for (const auto& [xc, yc] : cond.points) {
        support.push_back(xc);
    }
    std::sort(support.begin(), support.end());
    support.erase(std::unique(support.begin(), support.end()), support.end());
    Eigen::VectorXd grid = Eigen::Map<Eigen::VectorXd>(
        support.data(), static_cast<Eigen::Index>(support.size()));

    std::vector<Eigen::Index> cond_index;
    Eigen::VectorXd cond_value(static_cast<Eigen::Index>(cond.points.size()));
    std::vector<std::pair<double, double>> sorted_points = cond.points;
    std::sort(sorted_points.begin(), sorted_points.end());
    for (std::size_t j = 0; j < sorted_points.size(); ++j) {
        const auto it = std::lower_bound(support.begin(), support.end(),
                                         sorted_points[j].first);
        cond_index.push_back(static_cast<Eigen::Index>(it - support.begin()));
        cond_value(static_cast<Eigen::Index>(j)) = sorted_points[j].second;
    }
    return reverse_chain(model, s, k, grid, cond_index, cond_value, cond.n_free, rng);
}

double estimate_elbo_terms(const DenoiserModel& model,
                           const NoiseSchedule& s,
                           const KernelSpec& k,
                           const SpaceNorm& norm,
                           const DiscretizedFunction& u0,
                           int n_mc,
                           Rng& rng) {
    if (n_mc < 1) {
        throw std::invalid_argument("estimate_elbo_terms: n_mc must be >= 1");
    }
    if (u0.grid.size() != norm.grid().size() || u0.grid != norm.grid()) {
        throw GridMismatch("estimate_elbo_terms: norm grid differs from u0 grid");
    }
    if (s.T() < 2) {
        return 0.0;  // no posterior-matching terms exist
    }
    const GpSampler sampler(k, u0.grid);
    double total = 0.0;
    for (int i = 0; i < n_mc; ++i) {
        const int t = static_cast<int>(rng.uniform_int(2, s.T()));
        const ForwardSample fwd = forward_sample(s, u0, t, sampler, rng);
        const DiscretizedFunction xi_hat = model.predict(t, fwd.u_t);
        total += static_cast<double>(s.T() - 1) * s.lambda(t) *
                 norm.quad(fwd.xi.values - xi_hat.values);
    }
    return total / static_cast<double>(n_mc);
}

}  // namespace funcdiff
