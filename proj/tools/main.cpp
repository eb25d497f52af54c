// funcdiff command line driver: dataset generation, training, sampling,
// conditioning, evaluation, KL studies, FPCA baseline.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "funcdiff/data.hpp"
#include "funcdiff/denoiser.hpp"
#include "funcdiff/diffusion.hpp"
#include "funcdiff/kl.hpp"
#include "funcdiff/stats.hpp"

namespace {

using funcdiff::DiscretizedFunction;
using funcdiff::FunctionalDataset;
using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Eigen::VectorXd uniform_grid(int n) {
    if (n < 2) {
        throw std::invalid_argument("grid size must be at least 2");
    }
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
        g(i) = static_cast<double>(i) / static_cast<double>(n - 1);
    }
    return g;
}

// Left-closed uniform grid i/n; grids of sizes m | n nest, which the
// refinement study relies on.
Eigen::VectorXd left_uniform_grid(int n) {
    if (n < 2) {
        throw std::invalid_argument("grid size must be at least 2");
    }
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
        g(i) = static_cast<double>(i) / static_cast<double>(n);
    }
    return g;
}

void write_svg(const FunctionalDataset& data, const std::string& path) {
    static const char* kPalette[8] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                      "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& f : data.functions) {
        xmin = std::min(xmin, f.grid.minCoeff());
        xmax = std::max(xmax, f.grid.maxCoeff());
        ymin = std::min(ymin, f.values.minCoeff());
        ymax = std::max(ymax, f.values.maxCoeff());
    }
    if (!(xmax > xmin)) xmax = xmin + 1.0;
    if (!(ymax > ymin)) ymax = ymin + 1.0;
    const double pad = 0.05 * (ymax - ymin);
    ymin -= pad;
    ymax += pad;
    const double w = 800.0, h = 500.0, m = 40.0;
    auto sx = [&](double x) { return m + (x - xmin) / (xmax - xmin) * (w - 2 * m); };
    auto sy = [&](double y) { return h - m - (y - ymin) / (ymax - ymin) * (h - 2 * m); };

    std::ofstream out(path);
    if (!out) {
        throw funcdiff::ParseError("cannot open '" + path + "' for writing");
    }
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\">\n"
        << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n"
        << "<rect x=\"40\" y=\"40\" width=\"720\" height=\"420\" fill=\"none\" "
           "stroke=\"#cccccc\"/>\n";
    for (std::size_t i = 0; i < data.functions.size(); ++i) {
        const auto& f = data.functions[i];
        out << "<polyline fill=\"none\" stroke=\"" << kPalette[i % 8]
            << "\" stroke-width=\"1\" points=\"";
        for (Eigen::Index j = 0; j < f.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.6g,%.6g ", sx(f.grid(j)), sy(f.values(j)));
            out << buf;
        }
        out << "\"/>\n";
    }
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"40\" y=\"480\" font-size=\"12\">x: %.6g .. %.6g</text>", xmin,
                  xmax);
    out << buf << '\n';
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"400\" y=\"480\" font-size=\"12\">y: %.6g .. %.6g</text>", ymin,
                  ymax);
    out << buf << "\n</svg>\n";
}

void write_sidecar(const std::string& out_path, const std::string& subcommand,
                   std::uint64_t seed, json params) {
    json doc;
    doc["subcommand"] = subcommand;
    doc["seed"] = seed;
    doc["params"] = std::move(params);
    std::ofstream out(out_path + ".run.json");
    if (!out) {
        throw funcdiff::ParseError("cannot open '" + out_path + ".run.json' for writing");
    }
    out << doc.dump(2) << '\n';
}

std::vector<std::pair<double, double>> load_points_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw funcdiff::ParseError("cannot open '" + path + "'");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw funcdiff::ParseError("'" + path + "' is empty");
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y") {
        throw funcdiff::ParseError("line 1: expected header 'x,y', got '" + line + "'");
    }
    std::vector<std::pair<double, double>> points;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t c = line.find(',');
        if (c == std::string::npos || line.find(',', c + 1) != std::string::npos) {
            throw funcdiff::ParseError("line " + std::to_string(line_no) +
                                       ": expected 2 comma-separated fields");
        }
        try {
            points.emplace_back(std::stod(line.substr(0, c)), std::stod(line.substr(c + 1)));
        } catch (const std::exception&) {
            throw funcdiff::ParseError("line " + std::to_string(line_no) +
                                       ": cannot parse numbers");
        }
    }
    if (points.empty()) {
        throw funcdiff::ParseError("'" + path + "' has a header but no points");
    }
    return points;
}

// Options shared by every subcommand.
struct Common {
    std::uint64_t seed = 0;
    std::string config;
    bool plot = false;
    CLI::Option* seed_opt = nullptr;

    void attach(CLI::App* cmd) {
        seed_opt = cmd->add_option("--seed", seed, "random seed (default 0)");
        cmd->add_option("--config", config,
                        "JSON file of option values; explicit flags override");
        cmd->add_flag("--plot", plot, "also write an SVG rendering of CSV outputs");
    }

    std::uint64_t resolve_seed() const {
        if (seed_opt->count() > 0) {
            return seed;
        }
        if (const char* env = std::getenv("FUNCDIFF_SEED")) {
            try {
                std::size_t pos = 0;
                const unsigned long long v = std::stoull(env, &pos);
                if (pos != std::string(env).size()) throw std::invalid_argument("");
                return v;
            } catch (const std::exception&) {
                throw CLI::ValidationError("FUNCDIFF_SEED",
                                           "cannot parse '" + std::string(env) + "'");
            }
        }
        return 0;
    }
};

struct KernelFlags {
    std::string family = "se";
    double lengthscale = 0.1;
    double variance = 1.0;

    void attach(CLI::App* cmd, const std::string& prefix = "") {
        cmd->add_option("--" + prefix + "kernel", family,
                        "kernel family: se, matern12, matern32")
            ->check(CLI::IsMember({"se", "matern12", "matern32"}));
        cmd->add_option("--" + prefix + "lengthscale", lengthscale, "kernel lengthscale");
        cmd->add_option("--" + prefix + "variance", variance, "kernel variance");
    }

    funcdiff::KernelSpec spec() const {
        return {funcdiff::kernel_family_from_name(family), lengthscale, variance};
    }

    json to_json() const {
        return {{"kernel", family}, {"lengthscale", lengthscale}, {"variance", variance}};
    }
};

// Pre-parse step: splice config-file values in as tokens right after the
// subcommand so later explicit flags win under the take-last policy.
std::vector<std::string> splice_config(std::vector<std::string> args) {
    std::size_t sub_pos = args.size();
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!args[i].empty() && args[i][0] != '-') {
            sub_pos = i;
            break;
        }
    }
    std::string config_path;
    for (std::size_t i = sub_pos; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            config_path = args[i].substr(9);
        }
    }
    if (sub_pos == args.size() || config_path.empty()) {
        return args;
    }
    std::ifstream in(config_path);
    if (!in) {
        throw CLI::ValidationError("--config", "cannot open '" + config_path + "'");
    }
    json cfg;
    try {
        in >> cfg;
    } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", "'" + config_path +
                                                   "' is not valid JSON: " + e.what());
    }
    if (!cfg.is_object()) {
        throw CLI::ValidationError("--config", "'" + config_path +
                                                   "' must hold a JSON object");
    }
    std::vector<std::string> tokens;
    for (const auto& [key, value] : cfg.items()) {
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back("--" + key);
        } else if (value.is_string()) {
            tokens.push_back("--" + key);
            tokens.push_back(value.get<std::string>());
        } else {
            tokens.push_back("--" + key);
            tokens.push_back(value.dump());
        }
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1,
                tokens.begin(), tokens.end());
    return args;
}

void save_with_plot(const FunctionalDataset& data, const std::string& out, bool plot) {
    funcdiff::save_csv(data, out);
    if (plot) {
        write_svg(data, out + ".svg");
    }
}

int run(std::vector<std::string> args);

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(std::vector<std::string>(argv + 1, argv + argc));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}

namespace {

int run(std::vector<std::string> args) {
    CLI::App app{"diffusion generative modeling for functional data"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    Common gen_c;
    std::string gen_dataset, gen_out;
    int gen_n = 500, gen_grid = 64;
    gen->add_option("--dataset", gen_dataset, "mogp or linear")
        ->required()
        ->check(CLI::IsMember({"mogp", "linear"}));
    gen->add_option("--n", gen_n, "number of functions");
    gen->add_option("--grid", gen_grid, "uniform grid size on [0,1]");
    gen->add_option("--out", gen_out, "output CSV path")->required();
    gen_c.attach(gen);

    // train
    auto* train_cmd = app.add_subcommand("train", "train a denoiser on a dataset");
    Common train_c;
    KernelFlags train_kernel;
    std::string train_data, train_space = "l2", train_out;
    int train_T = 1000, train_epochs = 50, train_batch = 16;
    int train_layers = 3, train_width = 64, train_embed = 8;
    double train_beta1 = 1e-4, train_betaT = 0.02, train_lr = 1e-3, train_radius = 0.15;
    train_cmd->add_option("--data", train_data, "training CSV")->required();
    train_cmd->add_option("--space", train_space, "loss geometry: l2 or h1")
        ->check(CLI::IsMember({"l2", "h1"}));
    train_kernel.attach(train_cmd);
    train_cmd->add_option("--T", train_T, "diffusion steps");
    train_cmd->add_option("--beta1", train_beta1, "first beta");
    train_cmd->add_option("--betaT", train_betaT, "last beta");
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--lr", train_lr, "learning rate");
    train_cmd->add_option("--batch", train_batch, "batch size");
    train_cmd->add_option("--layers", train_layers, "network depth");
    train_cmd->add_option("--width", train_width, "network width");
    train_cmd->add_option("--radius", train_radius, "smoothing radius");
    train_cmd->add_option("--embed", train_embed, "time embedding dimension");
    train_cmd->add_option("--out", train_out, "checkpoint path")->required();
    train_c.attach(train_cmd);

    // sample
    auto* sample_cmd = app.add_subcommand("sample", "sample from a trained model");
    Common sample_c;
    std::string sample_model, sample_out;
    int sample_n = 500, sample_grid = 64;
    sample_cmd->add_option("--model", sample_model, "checkpoint path")->required();
    sample_cmd->add_option("--n", sample_n, "number of samples");
    sample_cmd->add_option("--grid", sample_grid, "query grid size");
    sample_cmd->add_option("--out", sample_out, "output CSV path")->required();
    sample_c.attach(sample_cmd);

    // sample-cond
    auto* cond_cmd = app.add_subcommand("sample-cond", "conditional sampling");
    Common cond_c;
    std::string cond_model, cond_file, cond_out;
    int cond_n = 100, cond_grid = 64, cond_nfree = 0;
    cond_cmd->add_option("--model", cond_model, "checkpoint path")->required();
    cond_cmd->add_option("--cond-file", cond_file, "CSV of conditioning points (header x,y)")
        ->required();
    cond_cmd->add_option("--n-free", cond_nfree, "unconstrained final reverse steps");
    cond_cmd->add_option("--n", cond_n, "number of samples");
    cond_cmd->add_option("--grid", cond_grid, "query grid size");
    cond_cmd->add_option("--out", cond_out, "output CSV path")->required();
    cond_c.attach(cond_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "summary statistics of a sample CSV");
    Common eval_c;
    std::string eval_data, eval_ref, eval_out;
    int eval_maxlag = 32;
    eval_cmd->add_option("--data", eval_data, "CSV to evaluate")->required();
    eval_cmd->add_option("--ref", eval_ref, "reference CSV for statistic MSEs");
    eval_cmd->add_option("--max-lag", eval_maxlag, "autocorrelation lags");
    eval_cmd->add_option("--out", eval_out, "output prefix")->required();
    eval_c.attach(eval_cmd);

    // kl-study
    auto* kl_cmd = app.add_subcommand("kl-study", "KL growth under grid refinement and truncation");
    Common kl_c;
    KernelFlags kl_kernel;
    kl_kernel.family = "matern12";
    std::string kl_out, kl_spectral_out;
    std::vector<int> kl_grids = {8, 16, 32, 64};
    int kl_spectral_grid = 64;
    kl_kernel.attach(kl_cmd);
    kl_cmd->add_option("--grids", kl_grids, "nested grid sizes")->delimiter(',');
    kl_cmd->add_option("--spectral-grid", kl_spectral_grid, "grid size for the truncation sweep");
    kl_cmd->add_option("--out", kl_out, "output CSV (grid_size,kl_l2)")->required();
    kl_cmd->add_option("--spectral-out", kl_spectral_out,
                       "output CSV (J,kl_spectral,kl_l2); default <out>.spectral.csv");
    kl_c.attach(kl_cmd);

    // fpca
    auto* fpca_cmd = app.add_subcommand("fpca", "fit the FPCA baseline and sample from it");
    Common fpca_c;
    std::string fpca_data, fpca_out;
    int fpca_m = 5, fpca_n = 500;
    fpca_cmd->add_option("--data", fpca_data, "training CSV (common grid)")->required();
    fpca_cmd->add_option("--components", fpca_m, "number of principal components");
    fpca_cmd->add_option("--n", fpca_n, "number of samples");
    fpca_cmd->add_option("--out", fpca_out, "output CSV path")->required();
    fpca_c.attach(fpca_cmd);

    // oracle-sample
    auto* oracle_cmd = app.add_subcommand(
        "oracle-sample", "sample with the exact mixture denoiser (verification)");
    Common oracle_c;
    KernelFlags oracle_kernel;
    std::string oracle_dataset = "mogp", oracle_out, oracle_cond_file;
    int oracle_n = 64, oracle_grid = 32, oracle_T = 200, oracle_nfree = 0;
    double oracle_beta1 = 1e-4, oracle_betaT = 0.08;
    double oracle_data_lengthscale = 0.2, oracle_data_variance = 1.0;
    std::string oracle_data_kernel = "se";
    oracle_cmd->add_option("--dataset", oracle_dataset, "mogp, pointmass or gp")
        ->check(CLI::IsMember({"mogp", "pointmass", "gp"}));
    oracle_kernel.attach(oracle_cmd);
    oracle_cmd->add_option("--data-kernel", oracle_data_kernel,
                           "gp dataset: data kernel family")
        ->check(CLI::IsMember({"se", "matern12", "matern32"}));
    oracle_cmd->add_option("--data-lengthscale", oracle_data_lengthscale,
                           "gp dataset: data kernel lengthscale");
    oracle_cmd->add_option("--data-variance", oracle_data_variance,
                           "gp dataset: data kernel variance");
    oracle_cmd->add_option("--T", oracle_T, "diffusion steps");
    oracle_cmd->add_option("--beta1", oracle_beta1, "first beta");
    oracle_cmd->add_option("--betaT", oracle_betaT, "last beta");
    oracle_cmd->add_option("--n", oracle_n, "number of samples");
    oracle_cmd->add_option("--grid", oracle_grid, "query grid size");
    oracle_cmd->add_option("--cond-file", oracle_cond_file,
                           "optional conditioning points CSV (header x,y)");
    oracle_cmd->add_option("--n-free", oracle_nfree, "unconstrained final reverse steps");
    oracle_cmd->add_option("--out", oracle_out, "output CSV path")->required();
    oracle_c.attach(oracle_cmd);

    try {
        args = splice_config(std::move(args));
        std::vector<const char*> argv;
        argv.push_back("funcdiff");
        for (const auto& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (gen->parsed()) {
        const std::uint64_t seed = gen_c.resolve_seed();
        funcdiff::Rng rng(seed);
        const Eigen::VectorXd grid = uniform_grid(gen_grid);
        FunctionalDataset data = gen_dataset == "mogp" ? funcdiff::gen_mogp(gen_n, grid, rng)
                                                       : funcdiff::gen_linear(gen_n, grid, rng);
        save_with_plot(data, gen_out, gen_c.plot);
        write_sidecar(gen_out, "gen", seed,
                      {{"dataset", gen_dataset}, {"n", gen_n}, {"grid", gen_grid},
                       {"out", gen_out}, {"plot", gen_c.plot}});
        return 0;
    }

    if (train_cmd->parsed()) {
        const std::uint64_t seed = train_c.resolve_seed();
        funcdiff::Rng rng(seed);
        const FunctionalDataset data = funcdiff::load_csv(train_data);
        const funcdiff::NoiseSchedule schedule =
            funcdiff::make_linear_schedule(train_T, train_beta1, train_betaT);
        const funcdiff::KernelSpec noise = train_kernel.spec();
        const funcdiff::SpaceVariant space = train_space == "l2"
                                                 ? funcdiff::SpaceVariant::L2
                                                 : funcdiff::SpaceVariant::SobolevH1;
        funcdiff::NnHyper hyper;
        hyper.layers = train_layers;
        hyper.width = train_width;
        hyper.smoothing_radius = train_radius;
        hyper.time_embed_dim = train_embed;
        hyper.schedule_len = train_T;
        funcdiff::KernelNeuralDenoiser model = funcdiff::KernelNeuralDenoiser::init(hyper, rng);
        funcdiff::TrainConfig cfg;
        cfg.epochs = train_epochs;
        cfg.learning_rate = train_lr;
        cfg.batch_size = train_batch;
        const std::vector<double> history =
            funcdiff::train(model, data, schedule, noise, space, cfg, rng);

        funcdiff::ModelCheckpoint ckpt;
        ckpt.hyper = hyper;
        ckpt.beta1 = train_beta1;
        ckpt.betaT = train_betaT;
        ckpt.noise = noise;
        ckpt.space = space;
        ckpt.weights = model.weights();
        funcdiff::save_checkpoint(ckpt, train_out);

        std::ofstream loss_out(train_out + ".loss.csv");
        loss_out << "step,loss\n";
        for (std::size_t i = 0; i < history.size(); ++i) {
            loss_out << i << ',' << fmt(history[i]) << '\n';
        }
        json params = train_kernel.to_json();
        params.update({{"data", train_data}, {"space", train_space}, {"T", train_T},
                       {"beta1", train_beta1}, {"betaT", train_betaT},
                       {"epochs", train_epochs}, {"lr", train_lr}, {"batch", train_batch},
                       {"layers", train_layers}, {"width", train_width},
                       {"radius", train_radius}, {"embed", train_embed},
                       {"out", train_out}});
        write_sidecar(train_out, "train", seed, params);
        return 0;
    }

    if (sample_cmd->parsed()) {
        const std::uint64_t seed = sample_c.resolve_seed();
        funcdiff::Rng rng(seed);
        const funcdiff::ModelCheckpoint ckpt = funcdiff::load_checkpoint(sample_model);
        const funcdiff::KernelNeuralDenoiser model(ckpt.hyper, ckpt.weights);
        const funcdiff::NoiseSchedule schedule = ckpt.make_schedule();
        const Eigen::VectorXd grid = uniform_grid(sample_grid);
        FunctionalDataset data;
        data.name = "samples";
        for (int i = 0; i < sample_n; ++i) {
            data.functions.push_back(
                funcdiff::sample_unconditional(model, schedule, ckpt.noise, grid, rng));
        }
        save_with_plot(data, sample_out, sample_c.plot);
        write_sidecar(sample_out, "sample", seed,
                      {{"model", sample_model}, {"n", sample_n}, {"grid", sample_grid},
                       {"out", sample_out}, {"plot", sample_c.plot}});
        return 0;
    }

    if (cond_cmd->parsed()) {
        const std::uint64_t seed = cond_c.resolve_seed();
        funcdiff::Rng rng(seed);
        const funcdiff::ModelCheckpoint ckpt = funcdiff::load_checkpoint(cond_model);
        const funcdiff::KernelNeuralDenoiser model(ckpt.hyper, ckpt.weights);
        const funcdiff::NoiseSchedule schedule = ckpt.make_schedule();
        funcdiff::ConditioningSet cond;
        cond.points = load_points_csv(cond_file);
        cond.n_free = cond_nfree;
        const Eigen::VectorXd grid = uniform_grid(cond_grid);
        FunctionalDataset data;
        data.name = "conditional-samples";
        for (int i = 0; i < cond_n; ++i) {
            data.functions.push_back(
                funcdiff::sample_conditional(model, schedule, ckpt.noise, grid, cond, rng));
        }
        save_with_plot(data, cond_out, cond_c.plot);
        write_sidecar(cond_out, "sample-cond", seed,
                      {{"model", cond_model}, {"cond-file", cond_file},
                       {"n-free", cond_nfree}, {"n", cond_n}, {"grid", cond_grid},
                       {"out", cond_out}, {"plot", cond_c.plot}});
        return 0;
    }

    if (eval_cmd->parsed()) {
        const std::uint64_t seed = eval_c.resolve_seed();
        const FunctionalDataset data = funcdiff::load_csv(eval_data);
        const Eigen::VectorXd& grid = data.common_grid();
        const Eigen::VectorXd mean = funcdiff::pointwise_mean(data);
        const Eigen::VectorXd var = funcdiff::pointwise_var(data);
        const funcdiff::Autocorrelation ac = funcdiff::mean_autocorrelation(data, eval_maxlag);
        const double smooth = funcdiff::smoothness(data);

        // Resolve all reference metrics before opening any output file, so a
        // bad --ref cannot leave a truncated summary behind.
        std::vector<std::pair<std::string, double>> ref_metrics;
        if (!eval_ref.empty()) {
            const FunctionalDataset ref = funcdiff::load_csv(eval_ref);
            const Eigen::VectorXd& ref_grid = ref.common_grid();
            if (ref_grid.size() != grid.size() ||
                (ref_grid - grid).cwiseAbs().maxCoeff() != 0.0) {
                throw funcdiff::GridMismatch("--ref '" + eval_ref +
                                             "' is on a different grid than --data '" +
                                             eval_data + "'");
            }
            const funcdiff::Autocorrelation ref_ac =
                funcdiff::mean_autocorrelation(ref, eval_maxlag);
            ref_metrics.emplace_back("mse_mean",
                                     funcdiff::stat_mse(mean, funcdiff::pointwise_mean(ref)));
            ref_metrics.emplace_back("mse_var",
                                     funcdiff::stat_mse(var, funcdiff::pointwise_var(ref)));
            ref_metrics.emplace_back("mse_autocorr", funcdiff::stat_mse(ac.rho, ref_ac.rho));
            ref_metrics.emplace_back("ref_smoothness", funcdiff::smoothness(ref));
        }

        std::ofstream mv(eval_out + ".meanvar.csv");
        mv << "x,mean,var\n";
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            mv << fmt(grid(i)) << ',' << fmt(mean(i)) << ',' << fmt(var(i)) << '\n';
        }
        std::ofstream acf(eval_out + ".autocorr.csv");
        acf << "lag,autocorr\n";
        for (Eigen::Index i = 0; i < ac.rho.size(); ++i) {
            acf << i << ',' << fmt(ac.rho(i)) << '\n';
        }
        std::ofstream summary(eval_out + ".summary.csv");
        summary << "metric,value\n";
        summary << "smoothness," << fmt(smooth) << '\n';
        summary << "autocorr_degenerate_count," << ac.degenerate_count << '\n';
        for (const auto& [name, value] : ref_metrics) {
            summary << name << ',' << fmt(value) << '\n';
        }
        write_sidecar(eval_out, "eval", seed,
                      {{"data", eval_data}, {"ref", eval_ref}, {"max-lag", eval_maxlag},
                       {"out", eval_out}});
        return 0;
    }

    if (kl_cmd->parsed()) {
        const std::uint64_t seed = kl_c.resolve_seed();
        const funcdiff::KernelSpec kernel = kl_kernel.spec();
        const std::string spectral_path =
            kl_spectral_out.empty() ? kl_out + ".spectral.csv" : kl_spectral_out;
        auto dm_fn = [](double x) { return std::sin(2.0 * std::numbers::pi * x); };

        std::ofstream study(kl_out);
        study << "grid_size,kl_l2\n";
        for (int n : kl_grids) {
            const Eigen::VectorXd grid = left_uniform_grid(n);
            Eigen::VectorXd dm(grid.size());
            for (Eigen::Index i = 0; i < grid.size(); ++i) dm(i) = dm_fn(grid(i));
            study << n << ',' << fmt(funcdiff::kl_l2(dm, funcdiff::gram(kernel, grid))) << '\n';
        }

        const Eigen::VectorXd sg = left_uniform_grid(kl_spectral_grid);
        Eigen::VectorXd dm(sg.size());
        for (Eigen::Index i = 0; i < sg.size(); ++i) dm(i) = dm_fn(sg(i));
        const funcdiff::SymMatrix k = funcdiff::gram(kernel, sg);
        const double full = funcdiff::kl_l2(dm, k);
        std::ofstream spectral(spectral_path);
        spectral << "J,kl_spectral,kl_l2\n";
        for (int j = 1; j <= kl_spectral_grid; ++j) {
            spectral << j << ',' << fmt(funcdiff::kl_spectral(dm, k, j)) << ',' << fmt(full)
                     << '\n';
        }
        json params = kl_kernel.to_json();
        params.update({{"grids", kl_grids}, {"spectral-grid", kl_spectral_grid},
                       {"out", kl_out}, {"spectral-out", spectral_path}});
        write_sidecar(kl_out, "kl-study", seed, params);
        return 0;
    }

    if (fpca_cmd->parsed()) {
        const std::uint64_t seed = fpca_c.resolve_seed();
        funcdiff::Rng rng(seed);
        const FunctionalDataset data = funcdiff::load_csv(fpca_data);
        const funcdiff::FpcaModel model = funcdiff::fpca_fit(data, fpca_m);
        const FunctionalDataset samples = funcdiff::fpca_sample(model, fpca_n, rng);
        save_with_plot(samples, fpca_out, fpca_c.plot);
        write_sidecar(fpca_out, "fpca", seed,
                      {{"data", fpca_data}, {"components", fpca_m}, {"n", fpca_n},
                       {"out", fpca_out}, {"plot", fpca_c.plot}});
        return 0;
    }

    if (oracle_cmd->parsed()) {
        const std::uint64_t seed = oracle_c.resolve_seed();
        funcdiff::Rng rng(seed);
        const funcdiff::NoiseSchedule schedule =
            funcdiff::make_linear_schedule(oracle_T, oracle_beta1, oracle_betaT);
        const funcdiff::KernelSpec noise = oracle_kernel.spec();

        std::vector<funcdiff::MixtureComponent> comps;
        if (oracle_dataset == "mogp") {
            const funcdiff::KernelSpec data_kernel(funcdiff::KernelFamily::SquaredExponential,
                                                   0.1, 0.4);
            comps.push_back({0.5, [](double x) { return 10.0 * x - 5.0; }, data_kernel});
            comps.push_back({0.5, [](double x) { return -10.0 * x + 5.0; }, data_kernel});
        } else if (oracle_dataset == "pointmass") {
            comps.push_back(
                {1.0, [](double x) { return std::sin(2.0 * std::numbers::pi * x); },
                 std::nullopt});
        } else {
            comps.push_back({1.0, [](double) { return 0.0; },
                             funcdiff::KernelSpec(
                                 funcdiff::kernel_family_from_name(oracle_data_kernel),
                                 oracle_data_lengthscale, oracle_data_variance)});
        }
        const funcdiff::AnalyticGPMixtureDenoiser model(std::move(comps), noise, schedule);

        const Eigen::VectorXd grid = uniform_grid(oracle_grid);
        FunctionalDataset data;
        data.name = "oracle-samples";
        if (oracle_cond_file.empty()) {
            for (int i = 0; i < oracle_n; ++i) {
                data.functions.push_back(
                    funcdiff::sample_unconditional(model, schedule, noise, grid, rng));
            }
        } else {
            funcdiff::ConditioningSet cond;
            cond.points = load_points_csv(oracle_cond_file);
            cond.n_free = oracle_nfree;
            for (int i = 0; i < oracle_n; ++i) {
                data.functions.push_back(
                    funcdiff::sample_conditional(model, schedule, noise, grid, cond, rng));
            }
        }
        save_with_plot(data, oracle_out, oracle_c.plot);
        json params = oracle_kernel.to_json();
        params.update({{"dataset", oracle_dataset}, {"data-kernel", oracle_data_kernel},
                       {"data-lengthscale", oracle_data_lengthscale},
                       {"data-variance", oracle_data_variance}, {"T", oracle_T},
                       {"beta1", oracle_beta1}, {"betaT", oracle_betaT}, {"n", oracle_n},
                       {"grid", oracle_grid}, {"cond-file", oracle_cond_file},
                       {"n-free", oracle_nfree}, {"out", oracle_out},
                       {"plot", oracle_c.plot}});
        write_sidecar(oracle_out, "oracle-sample", seed, params);
        return 0;
    }

    return 1;
}

}  // namespace
