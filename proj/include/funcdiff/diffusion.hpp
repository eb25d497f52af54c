#pragma once

#include "funcdiff/denoiser.hpp"
#include "funcdiff/kl.hpp"
#include "funcdiff/schedule.hpp"

namespace funcdiff {

struct ConditioningSet {
    std::vector<std::pair<double, double>> points;  // (location, value), locations distinct
    int n_free = 0;  // reverse steps left unconstrained at the end of the chain
};

// Ancestral sampling: start from a GP draw, walk t = T..1 through
// u_{t-1} = (u_t - (beta_t / sqrt(1 - gamma_t)) predict(t, u_t)) / sqrt(1 - beta_t)
//           + sqrt(beta_tilde_t) * fresh GP draw,
// with no noise at t = 1 (beta_tilde(1) == 0).
DiscretizedFunction sample_unconditional(const DenoiserModel& model,
                                         const NoiseSchedule& s,
                                         const KernelSpec& k,
                                         const Eigen::VectorXd& grid,
                                         Rng& rng);

// Same chain on the union of query grid and conditioning locations; after the
// step at iteration t > n_free, conditioned entries are overwritten with
// sqrt(gamma_t) y_c + sqrt(1 - gamma_t) * fresh noise at those locations.
// The last n_free iterations run free, which steers rather than pins samples.
DiscretizedFunction sample_conditional(const DenoiserModel& model,
                                       const NoiseSchedule& s,
                                       const KernelSpec& k,
                                       const Eigen::VectorXd& query_grid,
                                       const ConditioningSet& cond,
                                       Rng& rng);

// Monte Carlo estimate of the posterior-matching bound terms: average of
// (T-1) * lambda_t * <xi - xi_hat, A (xi - xi_hat)> over t ~ U{2..T} and
// fresh forward draws from u0.
double estimate_elbo_terms(const DenoiserModel& model,
                           const NoiseSchedule& s,
                           const KernelSpec& k,
                           const SpaceNorm& norm,
                           const DiscretizedFunction& u0,
                           int n_mc,
                           Rng& rng);

}  // namespace funcdiff
