#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "funcdiff/data.hpp"
#include "funcdiff/kl.hpp"
#include "funcdiff/schedule.hpp"

namespace funcdiff {

// Noise predictor contract: maps (t, u_t) to an estimate of the GP noise that
// produced u_t, on the same grid, deterministically.
class DenoiserModel {
public:
    virtual ~DenoiserModel() = default;
    virtual DiscretizedFunction predict(int t, const DiscretizedFunction& u_t) const = 0;
};

struct MixtureComponent {
    double weight = 1.0;
    std::function<double(double)> mean;
    // Data covariance of the component; nullopt is the zero operator
    // (a point mass at the mean curve).
    std::optional<KernelSpec> cov;
};

// Exact conditional expectation E[xi | u_t] when the data distribution is a
// finite GP mixture. Serves as the Bayes-optimal reference the trained model
// is measured against.
class AnalyticGPMixtureDenoiser : public DenoiserModel {
public:
    AnalyticGPMixtureDenoiser(std::vector<MixtureComponent> components,
                              KernelSpec noise, NoiseSchedule schedule);
    ~AnalyticGPMixtureDenoiser() override;

    DiscretizedFunction predict(int t, const DiscretizedFunction& u_t) const override;

    // Posterior component weights at (t, u_t); sum to 1.
    Eigen::VectorXd component_weights(int t, const DiscretizedFunction& u_t) const;

    const NoiseSchedule& schedule() const { return schedule_; }

private:
    struct TStepCache;
    struct GridCache;
    const TStepCache& cache_for(const Eigen::VectorXd& grid, int t) const;

    std::vector<MixtureComponent> components_;
    KernelSpec noise_;
    NoiseSchedule schedule_;
    // Factorizations for the most recent grid, per t. Prediction is logically
    // const; the cache makes it non-reentrant, matching single-chain use.
    mutable std::unique_ptr<GridCache> cache_;
};

struct NnHyper {
    int layers = 3;
    int width = 64;
    double smoothing_radius = 0.15;
    int time_embed_dim = 8;  // even
    int schedule_len = 1000;  // T, for the t/T time embedding
};

struct NnWeights {
    std::vector<Eigen::MatrixXd> wa;  // wa[0]: F x W, rest W x W
    std::vector<Eigen::MatrixXd> wb;
    std::vector<Eigen::RowVectorXd> bias;
    Eigen::VectorXd readout;          // W
    double readout_bias = 0.0;

    static NnWeights zeros(const NnHyper& h);
    Eigen::Index count() const;
    Eigen::VectorXd flatten() const;
    static NnWeights unflatten(const NnHyper& h, const Eigen::VectorXd& flat);
};

// Pointwise features [u_t(x), x, time embedding] pushed through layers
// h <- tanh(h Wa + (S h) Wb + b) where S is a row-normalized Gaussian
// smoothing matrix over grid locations, then a linear readout. The smoothing
// term is a discretized kernel integral, so the map is a function-to-function
// operator rather than a fixed-size network.
class KernelNeuralDenoiser : public DenoiserModel {
public:
    KernelNeuralDenoiser(NnHyper hyper, NnWeights weights);
    static KernelNeuralDenoiser init(const NnHyper& hyper, Rng& rng);

    DiscretizedFunction predict(int t, const DiscretizedFunction& u_t) const override;
    // Same computation without the sorted-grid requirement; locations are
    // taken as given.
    Eigen::VectorXd forward_values(int t, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& v) const;

    const NnHyper& hyper() const { return hyper_; }
    const NnWeights& weights() const { return weights_; }
    NnWeights& mutable_weights() { return weights_; }

private:
    NnHyper hyper_;
    NnWeights weights_;
};

Eigen::MatrixXd smoothing_matrix(const Eigen::VectorXd& x, double radius);
Eigen::MatrixXd nn_features(const NnHyper& h, int t, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& v);

struct TrainItem {
    int t = 1;
    Eigen::VectorXd xi;   // supervision target
    Eigen::VectorXd u_t;  // network input values
};

// Mean over the batch of (xi - xi_hat)^T A (xi - xi_hat) and its gradient in
// the weights; all items must share norm.grid().
double loss_and_grad(const KernelNeuralDenoiser& model, const std::vector<TrainItem>& batch,
                     const SpaceNorm& norm, NnWeights& grad);

struct TrainConfig {
    int epochs = 50;
    double learning_rate = 1e-3;
    int batch_size = 16;
};

// Reweighted-bound training: per curve sample t ~ U{2..T}, draw xi, form u_t,
// step Adam on loss_and_grad. Batches group curves that share a grid, since
// the norm matrix is grid-specific. Returns the per-batch loss history.
std::vector<double> train(KernelNeuralDenoiser& model,
                          const FunctionalDataset& dataset,
                          const NoiseSchedule& schedule,
                          const KernelSpec& noise,
                          SpaceVariant space,
                          const TrainConfig& config,
                          Rng& rng);

// Everything needed to sample from a trained model later.
struct ModelCheckpoint {
    int format_version = 1;
    NnHyper hyper;
    double beta1 = 1e-4;
    double betaT = 0.02;
    KernelSpec noise;
    SpaceVariant space = SpaceVariant::L2;
    NnWeights weights;

    NoiseSchedule make_schedule() const { return make_linear_schedule(hyper.schedule_len, beta1, betaT); }
};

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

}  // namespace funcdiff
