#include "funcdiff/schedule.hpp"

#include <cmath>
#include <sstream>

namespace funcdiff {

int NoiseSchedule::check_t(int t) const {
    if (t < 1 || t > T()) {
        std::ostringstream os;
        os << "NoiseSchedule: t = " << t << " outside [1, " << T() << "]";
        throw std::out_of_range(os.str());
    }
    return t;
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
    if (betas.empty()) {
        throw InvalidSchedule("NoiseSchedule: need at least one step");
    }
    for (std::size_t i = 0; i < betas.size(); ++i) {
        if (!(betas[i] > 0.0) || !(betas[i] < 1.0)) {
            std::ostringstream os;
            os << "NoiseSchedule: beta_" << (i + 1) << " = " << betas[i]
               << " outside (0, 1)";
            throw InvalidSchedule(os.str());
        }
    }
    NoiseSchedule s;
    s.beta_ = std::move(betas);
    const std::size_t T = s.beta_.size();
    s.gamma_.resize(T);
    s.beta_tilde_.resize(T);
    s.lambda_.resize(T);
    double gamma_prev = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
        const double beta = s.beta_[i];
        const double gamma = (1.0 - beta) * gamma_prev;
        if (!(gamma > 0.0) || !(gamma < gamma_prev)) {
            throw InvalidSchedule("NoiseSchedule: gamma degenerated to zero");
        }
        s.gamma_[i] = gamma;
        if (i == 0) {
            s.beta_tilde_[i] = 0.0;
            s.lambda_[i] = 0.0;
        } else {
            const double bt = beta * (1.0 - gamma_prev) / (1.0 - gamma);
            s.beta_tilde_[i] = bt;
            s.lambda_[i] = beta * beta / (2.0 * bt * (1.0 - beta) * (1.0 - gamma));
        }
        gamma_prev = gamma;
    }
    return s;
}

NoiseSchedule make_linear_schedule(int T, double beta1, double betaT) {
    if (T < 2) {
        throw InvalidSchedule("make_linear_schedule: T must be >= 2");
    }
    if (!(beta1 > 0.0) || !(beta1 <= betaT) || !(betaT < 1.0)) {
        std::ostringstream os;
        os << "make_linear_schedule: need 0 < beta1 <= betaT < 1, got beta1 = "
           << beta1 << ", betaT = " << betaT;
        throw InvalidSchedule(os.str());
    }
    std::vector<double> betas(static_cast<std::size_t>(T));
    for (int t = 1; t <= T; ++t) {
        betas[static_cast<std::size_t>(t - 1)] =
            beta1 + static_cast<double>(t - 1) * (betaT - beta1) / static_cast<double>(T - 1);
    }
    betas.front() = beta1;
    betas.back() = betaT;
    return NoiseSchedule::from_betas(std::move(betas));
}

namespace {
void check_same_grid(const DiscretizedFunction& a, const DiscretizedFunction& b,
                     const char* what) {
    if (a.grid.size() != b.grid.size() || a.grid != b.grid) {
        throw GridMismatch(std::string(what) + ": functions live on different grids");
    }
}
}  // namespace

ForwardSample forward_sample(const NoiseSchedule& s,
                             const DiscretizedFunction& u0,
                             int t,
                             const GpSampler& sampler,
                             Rng& rng) {
    if (u0.grid.size() != sampler.grid().size() || u0.grid != sampler.grid()) {
        throw GridMismatch("forward_sample: sampler grid differs from u0 grid");
    }
    const double gamma = s.gamma(t);
    ForwardSample out;
    out.xi = sampler.draw(rng);
    out.u_t = DiscretizedFunction(
        u0.grid,
        std::sqrt(gamma) * u0.values + std::sqrt(1.0 - gamma) * out.xi.values);
    return out;
}

ForwardSample forward_sample(const NoiseSchedule& s,
                             const DiscretizedFunction& u0,
                             int t,
                             const KernelSpec& k,
                             Rng& rng) {
    return forward_sample(s, u0, t, GpSampler(k, u0.grid), rng);
}

DiscretizedFunction posterior_mean(const NoiseSchedule& s,
                                   int t,
                                   const DiscretizedFunction& u_t,
                                   const DiscretizedFunction& u0) {
    if (t < 2) {
        throw std::out_of_range("posterior_mean: defined for t >= 2");
    }
    check_same_grid(u_t, u0, "posterior_mean");
    const double beta = s.beta(t);
    const double gamma = s.gamma(t);
    const double gamma_prev = s.gamma(t - 1);
    const double c0 = std::sqrt(gamma_prev) * beta / (1.0 - gamma);
    const double ct = std::sqrt(1.0 - beta) * (1.0 - gamma_prev) / (1.0 - gamma);
    return DiscretizedFunction(u_t.grid, c0 * u0.values + ct * u_t.values);
}

DiscretizedFunction posterior_mean_from_noise(const NoiseSchedule& s,
                                              int t,
                                              const DiscretizedFunction& u_t,
                                              const DiscretizedFunction& xi_hat) {
    check_same_grid(u_t, xi_hat, "posterior_mean_from_noise");
    const double beta = s.beta(t);
    const double gamma = s.gamma(t);
    return DiscretizedFunction(
        u_t.grid,
        (u_t.values - (beta / std::sqrt(1.0 - gamma)) * xi_hat.values) /
            std::sqrt(1.0 - beta));
}

}  // namespace funcdiff
