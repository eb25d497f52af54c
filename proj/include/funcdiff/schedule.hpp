#pragma once

#include <vector>

#include "funcdiff/kernels.hpp"

namespace funcdiff {

// Variance schedule of the discrete-time diffusion. Accessors are 1-indexed
// in t; gamma(0) == 1 by convention so the t = 1 posterior is deterministic.
class NoiseSchedule {
public:
    static NoiseSchedule from_betas(std::vector<double> betas);

    int T() const { return static_cast<int>(beta_.size()); }
    double beta(int t) const { return beta_.at(check_t(t) - 1); }
    double gamma(int t) const { return t == 0 ? 1.0 : gamma_.at(check_t(t) - 1); }
    // beta_tilde(1) == 0: the first reverse step has a point-mass posterior.
    double beta_tilde(int t) const { return beta_tilde_.at(check_t(t) - 1); }
    // lambda(1) == 0: t = 1 carries no posterior-matching term.
    double lambda(int t) const { return lambda_.at(check_t(t) - 1); }

private:
    NoiseSchedule() = default;
    int check_t(int t) const;

    std::vector<double> beta_;
    std::vector<double> gamma_;
    std::vector<double> beta_tilde_;
    std::vector<double> lambda_;
};

// beta_t linearly interpolated from beta1 at t=1 to betaT at t=T.
NoiseSchedule make_linear_schedule(int T, double beta1, double betaT);

struct ForwardSample {
    DiscretizedFunction u_t;
    DiscretizedFunction xi;  // the exact noise draw, kept for supervision
};

// u_t = sqrt(gamma_t) u0 + sqrt(1 - gamma_t) xi with xi a fresh GP draw.
ForwardSample forward_sample(const NoiseSchedule& s,
                             const DiscretizedFunction& u0,
                             int t,
                             const KernelSpec& k,
                             Rng& rng);

ForwardSample forward_sample(const NoiseSchedule& s,
                             const DiscretizedFunction& u0,
                             int t,
                             const GpSampler& sampler,
                             Rng& rng);

// Mean of the reverse-process posterior given the clean function; defined for
// t >= 2 (training never uses the t = 1 term).
DiscretizedFunction posterior_mean(const NoiseSchedule& s,
                                   int t,
                                   const DiscretizedFunction& u_t,
                                   const DiscretizedFunction& u0);

// Same mean re-expressed through a noise estimate:
// m = (u_t - (beta_t / sqrt(1 - gamma_t)) xi_hat) / sqrt(1 - beta_t).
DiscretizedFunction posterior_mean_from_noise(const NoiseSchedule& s,
                                              int t,
                                              const DiscretizedFunction& u_t,
                                              const DiscretizedFunction& xi_hat);

}  // namespace funcdiff
