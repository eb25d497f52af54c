#pragma once

#include "funcdiff/data.hpp"

namespace funcdiff {

// Coordinatewise sample moments over a common-grid dataset; variance uses the
// unbiased n-1 divisor and needs at least two curves.
Eigen::VectorXd pointwise_mean(const FunctionalDataset& dataset);
Eigen::VectorXd pointwise_var(const FunctionalDataset& dataset);

struct Autocorrelation {
    Eigen::VectorXd rho;        // lag 0..max_lag
    int degenerate_count = 0;   // constant curves folded in by convention
};

// Per curve: center by its own mean, normalize by the lag-0 sum, average the
// per-lag ratios over curves. A constant curve has no scale, so it contributes
// rho(0)=1 and rho(lag>0)=0 and is counted in degenerate_count.
Autocorrelation mean_autocorrelation(const FunctionalDataset& dataset, int max_lag);

// Mean over curves of the population standard deviation of the finite
// difference derivative samples.
double smoothness(const FunctionalDataset& dataset);

double stat_mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace funcdiff
