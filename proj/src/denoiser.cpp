#include "funcdiff/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace funcdiff {

struct AnalyticGPMixtureDenoiser::TStepCache {
    // Per component: mean on the grid and the factorization of
    // gamma_t * Sigma_j + (1 - gamma_t) * K, with its log determinant.
    std::vector<Eigen::VectorXd> mu;
    std::vector<SpdFactor> factor;
    std::vector<double> logdet;
};

struct AnalyticGPMixtureDenoiser::GridCache {
    Eigen::VectorXd grid;
    Eigen::MatrixXd k;                        // noise Gram
    std::vector<Eigen::MatrixXd> sigma;       // component Grams (empty if zero)
    std::vector<Eigen::VectorXd> mu;          // component means on grid
    std::map<int, TStepCache> per_t;
};

AnalyticGPMixtureDenoiser::AnalyticGPMixtureDenoiser(
    std::vector<MixtureComponent> components, KernelSpec noise, NoiseSchedule schedule)
    : components_(std::move(components)),
      noise_(noise),
      schedule_(std::move(schedule)) {
    if (components_.empty()) {
        throw std::invalid_argument("AnalyticGPMixtureDenoiser: no components");
    }
    double total = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight > 0.0)) {
            throw std::invalid_argument("AnalyticGPMixtureDenoiser: weights must be positive");
        }
        if (!c.mean) {
            throw std::invalid_argument("AnalyticGPMixtureDenoiser: component lacks a mean");
        }
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        std::ostringstream os;
        os << "AnalyticGPMixtureDenoiser: weights sum to " << total << ", expected 1";
        throw std::invalid_argument(os.str());
    }
}

AnalyticGPMixtureDenoiser::~AnalyticGPMixtureDenoiser() = default;

const AnalyticGPMixtureDenoiser::TStepCache& AnalyticGPMixtureDenoiser::cache_for(
    const Eigen::VectorXd& grid, int t) const {
    if (!cache_ || cache_->grid.size() != grid.size() || cache_->grid != grid) {
        auto fresh = std::make_unique<GridCache>();
        fresh->grid = grid;
        fresh->k = gram(noise_, grid).mat();
        for (const auto& c : components_) {
            Eigen::VectorXd mu(grid.size());
            for (Eigen::Index i = 0; i < grid.size(); ++i) {
                mu(i) = c.mean(grid(i));
            }
            fresh->mu.push_back(std::move(mu));
            fresh->sigma.push_back(c.cov ? gram(*c.cov, grid).mat() : Eigen::MatrixXd());
        }
        cache_ = std::move(fresh);
    }
    auto it = cache_->per_t.find(t);
    if (it == cache_->per_t.end()) {
        const double gamma = schedule_.gamma(t);
        TStepCache step;
        for (std::size_t j = 0; j < components_.size(); ++j) {
            Eigen::MatrixXd m = (1.0 - gamma) * cache_->k;
            if (cache_->sigma[j].size() > 0) {
                m += gamma * cache_->sigma[j];
            }
            step.mu.push_back(std::sqrt(gamma) * cache_->mu[j]);
            step.factor.emplace_back(SymMatrix::symmetrized(m));
            step.logdet.push_back(step.factor.back().log_det());
        }
        it = cache_->per_t.emplace(t, std::move(step)).first;
    }
    return it->second;
}

namespace {
Eigen::VectorXd normalized_log_weights(const std::vector<double>& logw) {
    // log-sum-exp guard: well-separated components must not underflow to an
    // all-zero weight vector.
    double mx = logw.front();
    for (double v : logw) mx = std::max(mx, v);
    Eigen::VectorXd w(static_cast<Eigen::Index>(logw.size()));
    for (std::size_t j = 0; j < logw.size(); ++j) {
        w(static_cast<Eigen::Index>(j)) = std::exp(logw[j] - mx);
    }
    return w / w.sum();
}
}  // namespace

Eigen::VectorXd AnalyticGPMixtureDenoiser::component_weights(
    int t, const DiscretizedFunction& u_t) const {
    const TStepCache& step = cache_for(u_t.grid, t);
    const double n = static_cast<double>(u_t.size());
    std::vector<double> logw(components_.size());
    for (std::size_t j = 0; j < components_.size(); ++j) {
        const Eigen::VectorXd r = u_t.values - step.mu[j];
        const double quad = r.dot(step.factor[j].solve(r));
        logw[j] = std::log(components_[j].weight) -
                  0.5 * (n * std::log(2.0 * std::numbers::pi) + step.logdet[j] + quad);
    }
    return normalized_log_weights(logw);
}

DiscretizedFunction AnalyticGPMixtureDenoiser::predict(
    int t, const DiscretizedFunction& u_t) const {
    const TStepCache& step = cache_for(u_t.grid, t);
    const double gamma = schedule_.gamma(t);
    const Eigen::VectorXd w = component_weights(t, u_t);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(u_t.size());
    for (std::size_t j = 0; j < components_.size(); ++j) {
        const Eigen::VectorXd r = u_t.values - step.mu[j];
        out += w(static_cast<Eigen::Index>(j)) * std::sqrt(1.0 - gamma) *
               (cache_->k * step.factor[j].solve(r));
    }
    return DiscretizedFunction(u_t.grid, std::move(out));
}

NnWeights NnWeights::zeros(const NnHyper& h) {
    NnWeights w;
    const int f = 2 + h.time_embed_dim;
    for (int l = 0; l < h.layers; ++l) {
        const int in = l == 0 ? f : h.width;
        w.wa.emplace_back(Eigen::MatrixXd::Zero(in, h.width));
        w.wb.emplace_back(Eigen::MatrixXd::Zero(in, h.width));
        w.bias.emplace_back(Eigen::RowVectorXd::Zero(h.width));
    }
    w.readout = Eigen::VectorXd::Zero(h.width);
    w.readout_bias = 0.0;
    return w;
}

Eigen::Index NnWeights::count() const {
    Eigen::Index n = 0;
    for (const auto& m : wa) n += m.size();
    for (const auto& m : wb) n += m.size();
    for (const auto& b : bias) n += b.size();
    return n + readout.size() + 1;
}

Eigen::VectorXd NnWeights::flatten() const {
    Eigen::VectorXd flat(count());
    Eigen::Index at = 0;
    auto put = [&](const Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                flat(at++) = m(i, j);
            }
        }
    };
    for (std::size_t l = 0; l < wa.size(); ++l) {
        put(wa[l]);
        put(wb[l]);
        put(bias[l]);
    }
    put(readout);
    flat(at++) = readout_bias;
    return flat;
}

NnWeights NnWeights::unflatten(const NnHyper& h, const Eigen::VectorXd& flat) {
    NnWeights w = zeros(h);
    if (flat.size() != w.count()) {
        std::ostringstream os;
        os << "NnWeights: expected " << w.count() << " parameters, got " << flat.size();
        throw CheckpointError(os.str());
    }
    Eigen::Index at = 0;
    auto take = [&](Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                m(i, j) = flat(at++);
            }
        }
    };
    Eigen::MatrixXd tmp;
    for (std::size_t l = 0; l < w.wa.size(); ++l) {
        take(w.wa[l]);
        take(w.wb[l]);
        tmp = w.bias[l];
        take(tmp);
        w.bias[l] = tmp;
    }
    tmp = w.readout;
    take(tmp);
    w.readout = tmp;
    w.readout_bias = flat(at++);
    return w;
}

namespace {
void check_hyper(const NnHyper& h) {
    if (h.layers < 1 || h.width < 1 || !(h.smoothing_radius > 0.0) ||
        h.time_embed_dim < 2 || h.time_embed_dim % 2 != 0 || h.schedule_len < 1) {
        throw std::invalid_argument("NnHyper: invalid hyperparameters");
    }
}
}  // namespace

KernelNeuralDenoiser::KernelNeuralDenoiser(NnHyper hyper, NnWeights weights)
    : hyper_(hyper), weights_(std::move(weights)) {
    check_hyper(hyper_);
    if (weights_.flatten().size() != NnWeights::zeros(hyper_).count()) {
        throw std::invalid_argument("KernelNeuralDenoiser: weight shapes do not match hyperparameters");
    }
}

KernelNeuralDenoiser KernelNeuralDenoiser::init(const NnHyper& hyper, Rng& rng) {
    check_hyper(hyper);
    NnWeights w = NnWeights::zeros(hyper);
    auto glorot = [&](Eigen::MatrixXd& m) {
        const double a = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                m(i, j) = a * (2.0 * rng.uniform() - 1.0);
            }
        }
    };
    for (std::size_t l = 0; l < w.wa.size(); ++l) {
        glorot(w.wa[l]);
        glorot(w.wb[l]);
    }
    Eigen::MatrixXd r(w.readout.size(), 1);
    glorot(r);
    w.readout = r;
    return KernelNeuralDenoiser(hyper, std::move(w));
}

Eigen::MatrixXd smoothing_matrix(const Eigen::VectorXd& x, double radius) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd s(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double d = x(i) - x(j);
            s(i, j) = std::exp(-d * d / (2.0 * radius * radius));
        }
        s.row(i) /= s.row(i).sum();
    }
    return s;
}

Eigen::MatrixXd nn_features(const NnHyper& h, int t, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& v) {
    if (x.size() != v.size()) {
        throw std::invalid_argument("nn_features: location/value size mismatch");
    }
    const double tau = static_cast<double>(t) / static_cast<double>(h.schedule_len);
    Eigen::MatrixXd feat(x.size(), 2 + h.time_embed_dim);
    feat.col(0) = v;
    feat.col(1) = x;
    double freq = std::numbers::pi;
    for (int i = 0; i < h.time_embed_dim / 2; ++i) {
        feat.col(2 + 2 * i).setConstant(std::sin(freq * tau));
        feat.col(3 + 2 * i).setConstant(std::cos(freq * tau));
        freq *= 2.0;
    }
    return feat;
}

Eigen::VectorXd KernelNeuralDenoiser::forward_values(int t, const Eigen::VectorXd& x,
                                                     const Eigen::VectorXd& v) const {
    const Eigen::MatrixXd s = smoothing_matrix(x, hyper_.smoothing_radius);
    Eigen::MatrixXd h = nn_features(hyper_, t, x, v);
    for (std::size_t l = 0; l < weights_.wa.size(); ++l) {
        h = ((h * weights_.wa[l] + s * (h * weights_.wb[l])).rowwise() + weights_.bias[l])
                .array()
                .tanh();
    }
    return (h * weights_.readout).array() + weights_.readout_bias;
}

DiscretizedFunction KernelNeuralDenoiser::predict(int t, const DiscretizedFunction& u_t) const {
    if (u_t.size() < 2) {
        throw GridTooSmall("KernelNeuralDenoiser: need at least 2 grid points");
    }
    return DiscretizedFunction(u_t.grid, forward_values(t, u_t.grid, u_t.values));
}

double loss_and_grad(const KernelNeuralDenoiser& model, const std::vector<TrainItem>& batch,
                     const SpaceNorm& norm, NnWeights& grad) {
    if (batch.empty()) {
        throw std::invalid_argument("loss_and_grad: empty batch");
    }
    const NnHyper& hy = model.hyper();
    const NnWeights& w = model.weights();
    const Eigen::VectorXd& x = norm.grid();
    const Eigen::Index n = x.size();
    const std::size_t layers = w.wa.size();
    const double batch_size = static_cast<double>(batch.size());

    grad = NnWeights::zeros(hy);
    const Eigen::MatrixXd s = smoothing_matrix(x, hy.smoothing_radius);
    double loss = 0.0;

    std::vector<Eigen::MatrixXd> h(layers + 1);   // h[0] = features
    std::vector<Eigen::MatrixXd> sh(layers);      // sh[l] = s * h[l]
    for (const TrainItem& item : batch) {
        if (item.xi.size() != n || item.u_t.size() != n) {
            throw std::invalid_argument("loss_and_grad: item size does not match grid");
        }
        h[0] = nn_features(hy, item.t, x, item.u_t);
        for (std::size_t l = 0; l < layers; ++l) {
            sh[l] = s * h[l];
            h[l + 1] = ((h[l] * w.wa[l] + sh[l] * w.wb[l]).rowwise() + w.bias[l])
                           .array()
                           .tanh();
        }
        const Eigen::VectorXd y = (h[layers] * w.readout).array() + w.readout_bias;
        const Eigen::VectorXd res = item.xi - y;
        const Eigen::VectorXd a_res = norm.apply(res);
        loss += res.dot(a_res) / batch_size;

        Eigen::VectorXd dy = (-2.0 / batch_size) * a_res;
        grad.readout += h[layers].transpose() * dy;
        grad.readout_bias += dy.sum();
        Eigen::MatrixXd dh = dy * w.readout.transpose();
        for (std::size_t l = layers; l-- > 0;) {
            const Eigen::MatrixXd dz =
                dh.array() * (1.0 - h[l + 1].array().square());
            grad.wa[l] += h[l].transpose() * dz;
            grad.wb[l] += sh[l].transpose() * dz;
            grad.bias[l] += dz.colwise().sum();
            if (l > 0) {
                dh = dz * w.wa[l].transpose() +
                     s.transpose() * (dz * w.wb[l].transpose());
            }
        }
    }
    if (!std::isfinite(loss)) {
        std::ostringstream os;
        os << "loss_and_grad: non-finite loss on a batch of " << batch.size()
           << " items (first t = " << batch.front().t << ")";
        throw DivergedTraining(os.str());
    }
    return loss;
}

std::vector<double> train(KernelNeuralDenoiser& model,
                          const FunctionalDataset& dataset,
                          const NoiseSchedule& schedule,
                          const KernelSpec& noise,
                          SpaceVariant space,
                          const TrainConfig& config,
                          Rng& rng) {
    if (dataset.functions.empty()) {
        throw std::invalid_argument("train: empty dataset");
    }
    if (schedule.T() < 2) {
        throw InvalidSchedule("train: schedule must have T >= 2");
    }
    if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
        throw std::invalid_argument("train: invalid config");
    }

    // Curves sharing a grid train together: the norm matrix and the noise
    // factorization are grid-specific.
    struct Group {
        Eigen::VectorXd grid;
        std::vector<std::size_t> members;
        std::unique_ptr<SpaceNorm> norm;
        std::unique_ptr<GpSampler> sampler;
    };
    std::vector<Group> groups;
    for (std::size_t i = 0; i < dataset.functions.size(); ++i) {
        const Eigen::VectorXd& g = dataset.functions[i].grid;
        auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& gr) {
            return gr.grid.size() == g.size() && gr.grid == g;
        });
        if (it == groups.end()) {
            groups.push_back({g, {}, nullptr, nullptr});
            it = std::prev(groups.end());
        }
        it->members.push_back(i);
    }
    for (Group& gr : groups) {
        gr.norm = std::make_unique<SpaceNorm>(SpaceNorm::make(space, noise, gr.grid));
        gr.sampler = std::make_unique<GpSampler>(noise, gr.grid);
    }

    Eigen::VectorXd adam_m = Eigen::VectorXd::Zero(model.weights().count());
    Eigen::VectorXd adam_v = adam_m;
    long step = 0;
    std::vector<double> history;
    NnWeights grad;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (Group& gr : groups) {
            std::vector<std::size_t> order = gr.members;
            for (std::size_t i = order.size(); i > 1; --i) {
                const auto j = static_cast<std::size_t>(
                    rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
                std::swap(order[i - 1], order[j]);
            }
            for (std::size_t begin = 0; begin < order.size();
                 begin += static_cast<std::size_t>(config.batch_size)) {
                const std::size_t end = std::min(
                    order.size(), begin + static_cast<std::size_t>(config.batch_size));
                std::vector<TrainItem> batch;
                batch.reserve(end - begin);
                for (std::size_t k = begin; k < end; ++k) {
                    const DiscretizedFunction& u0 = dataset.functions[order[k]];
                    TrainItem item;
                    item.t = static_cast<int>(rng.uniform_int(2, schedule.T()));
                    const double gamma = schedule.gamma(item.t);
                    item.xi = gr.sampler->draw(rng).values;
                    item.u_t = std::sqrt(gamma) * u0.values +
                               std::sqrt(1.0 - gamma) * item.xi;
                    batch.push_back(std::move(item));
                }
                history.push_back(loss_and_grad(model, batch, *gr.norm, grad));

                ++step;
                const Eigen::VectorXd g = grad.flatten();
                adam_m = 0.9 * adam_m + 0.1 * g;
                adam_v = 0.999 * adam_v.array() + 0.001 * g.array().square();
                const double mc = 1.0 - std::pow(0.9, static_cast<double>(step));
                const double vc = 1.0 - std::pow(0.999, static_cast<double>(step));
                Eigen::VectorXd theta = model.weights().flatten();
                theta -= (config.learning_rate * (adam_m / mc).array() /
                          ((adam_v / vc).array().sqrt() + 1e-8))
                             .matrix();
                if (!theta.allFinite()) {
                    throw DivergedTraining("train: weights became non-finite");
                }
                model.mutable_weights() = NnWeights::unflatten(model.hyper(), theta);
            }
        }
    }
    return history;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = ckpt.format_version;
    j["architecture"] = {{"layers", ckpt.hyper.layers},
                         {"width", ckpt.hyper.width},
                         {"smoothing_radius", ckpt.hyper.smoothing_radius},
                         {"time_embed_dim", ckpt.hyper.time_embed_dim}};
    j["schedule"] = {{"T", ckpt.hyper.schedule_len},
                     {"beta1", ckpt.beta1},
                     {"betaT", ckpt.betaT}};
    j["noise_kernel"] = {{"family", kernel_family_name(ckpt.noise.family)},
                         {"lengthscale", ckpt.noise.lengthscale},
                         {"variance", ckpt.noise.variance}};
    j["space"] = space_variant_name(ckpt.space);
    const Eigen::VectorXd flat = ckpt.weights.flatten();
    j["weights"] = std::vector<double>(flat.data(), flat.data() + flat.size());

    std::ofstream out(path);
    if (!out) {
        throw CheckpointError("cannot open '" + path + "' for writing");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw CheckpointError("write to '" + path + "' failed");
    }
}

ModelCheckpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw CheckpointError("cannot open '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("'") + path + "' is not valid JSON: " + e.what());
    }
    try {
        const int version = j.at("format_version").get<int>();
        if (version != 1) {
            std::ostringstream os;
            os << "'" << path << "' has format_version " << version << ", expected 1";
            throw CheckpointError(os.str());
        }
        ModelCheckpoint ckpt;
        const auto& arch = j.at("architecture");
        ckpt.hyper.layers = arch.at("layers").get<int>();
        ckpt.hyper.width = arch.at("width").get<int>();
        ckpt.hyper.smoothing_radius = arch.at("smoothing_radius").get<double>();
        ckpt.hyper.time_embed_dim = arch.at("time_embed_dim").get<int>();
        const auto& sched = j.at("schedule");
        ckpt.hyper.schedule_len = sched.at("T").get<int>();
        ckpt.beta1 = sched.at("beta1").get<double>();
        ckpt.betaT = sched.at("betaT").get<double>();
        const auto& nk = j.at("noise_kernel");
        ckpt.noise = KernelSpec(kernel_family_from_name(nk.at("family").get<std::string>()),
                                nk.at("lengthscale").get<double>(),
                                nk.at("variance").get<double>());
        ckpt.space = space_variant_from_name(j.at("space").get<std::string>());
        const auto weights = j.at("weights").get<std::vector<double>>();
        ckpt.weights = NnWeights::unflatten(
            ckpt.hyper, Eigen::Map<const Eigen::VectorXd>(
                            weights.data(), static_cast<Eigen::Index>(weights.size())));
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointError(std::string("'") + path + "' is missing fields: " + e.what());
    }
}

}  // namespace funcdiff
