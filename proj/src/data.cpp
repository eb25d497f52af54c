#include "funcdiff/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace funcdiff {

const Eigen::VectorXd& FunctionalDataset::common_grid() const {
    if (functions.empty()) {
        throw std::invalid_argument("FunctionalDataset: empty dataset");
    }
    const Eigen::VectorXd& g = functions.front().grid;
    for (std::size_t i = 1; i < functions.size(); ++i) {
        if (functions[i].grid.size() != g.size() || functions[i].grid != g) {
            std::ostringstream os;
            os << "dataset '" << name << "': function " << i
               << " is on a different grid";
            throw GridMismatch(os.str());
        }
    }
    return g;
}

FunctionalDataset gen_mogp(int n_functions, const Eigen::VectorXd& grid, Rng& rng) {
    if (n_functions < 1) {
        throw std::invalid_argument("gen_mogp: need at least one function");
    }
    const KernelSpec kernel(KernelFamily::SquaredExponential, 0.1, 0.4);
    const GpSampler sampler(kernel, grid);
    Eigen::VectorXd mean_up = 10.0 * grid.array() - 5.0;
    FunctionalDataset out;
    out.name = "mogp";
    out.functions.reserve(static_cast<std::size_t>(n_functions));
    for (int i = 0; i < n_functions; ++i) {
        const bool up = rng.uniform() < 0.5;
        DiscretizedFunction f = sampler.draw(rng);
        f.values += up ? mean_up : Eigen::VectorXd(-mean_up);
        out.functions.push_back(std::move(f));
    }
    return out;
}

FunctionalDataset gen_linear(int n_functions, const Eigen::VectorXd& grid, Rng& rng) {
    if (n_functions < 1) {
        throw std::invalid_argument("gen_linear: need at least one function");
    }
    check_strictly_increasing(grid, "gen_linear");
    FunctionalDataset out;
    out.name = "linear";
    out.functions.reserve(static_cast<std::size_t>(n_functions));
    for (int i = 0; i < n_functions; ++i) {
        const double a = 2.0 + 0.25 * rng.normal();
        const double b = -1.0 + 0.07 * rng.normal();
        out.functions.emplace_back(grid, a * grid.array() + b);
    }
    return out;
}

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != s.size() || s.empty()) {
        std::ostringstream os;
        os << "line " << line_no << ": cannot parse " << what << " value '" << s << "'";
        throw ParseError(os.str());
    }
    return v;
}

}  // namespace

FunctionalDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open '" + path + "'");
    }
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ParseError("'" + path + "' is empty");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "function_id,x,y") {
        throw ParseError("line 1: expected header 'function_id,x,y', got '" + line + "'");
    }

    // first-appearance order of function ids
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::pair<double, double>>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos) {
            std::ostringstream os;
            os << "line " << line_no << ": expected 3 comma-separated fields";
            throw ParseError(os.str());
        }
        const std::string id = line.substr(0, c1);
        const double x = parse_double(line.substr(c1 + 1, c2 - c1 - 1), line_no, "x");
        const double y = parse_double(line.substr(c2 + 1), line_no, "y");
        auto [it, inserted] = rows.try_emplace(id);
        if (inserted) order.push_back(id);
        it->second.emplace_back(x, y);
    }
    if (order.empty()) {
        throw ParseError("'" + path + "' has a header but no data rows");
    }

    FunctionalDataset out;
    out.name = path;
    for (const std::string& id : order) {
        auto& pts = rows[id];
        std::stable_sort(pts.begin(), pts.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        Eigen::VectorXd grid(static_cast<Eigen::Index>(pts.size()));
        Eigen::VectorXd values(grid.size());
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            grid(i) = pts[static_cast<std::size_t>(i)].first;
            values(i) = pts[static_cast<std::size_t>(i)].second;
        }
        for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
            if (grid(i) == grid(i + 1)) {
                std::ostringstream os;
                os << "function '" << id << "': duplicate x = " << grid(i);
                throw NonMonotoneGrid(os.str());
            }
        }
        out.functions.emplace_back(std::move(grid), std::move(values));
    }
    return out;
}

void save_csv(const FunctionalDataset& dataset, const std::string& path) {
    if (dataset.functions.empty()) {
        throw std::invalid_argument("save_csv: empty dataset");
    }
    std::ofstream out(path);
    if (!out) {
        throw ParseError("cannot open '" + path + "' for writing");
    }
    out << "function_id,x,y\n";
    for (std::size_t f = 0; f < dataset.functions.size(); ++f) {
        const DiscretizedFunction& fn = dataset.functions[f];
        for (Eigen::Index i = 0; i < fn.size(); ++i) {
            out << 'f' << f << ',' << format_double(fn.grid(i)) << ','
                << format_double(fn.values(i)) << '\n';
        }
    }
    if (!out) {
        throw ParseError("write to '" + path + "' failed");
    }
}

FpcaModel fpca_fit(const FunctionalDataset& dataset, int n_components) {
    const Eigen::VectorXd& grid = dataset.common_grid();
    const Eigen::Index n = grid.size();
    const Eigen::Index nf = static_cast<Eigen::Index>(dataset.functions.size());
    if (n_components < 1 || n_components > std::min(n, nf)) {
        std::ostringstream os;
        os << "fpca_fit: n_components = " << n_components
           << " outside [1, min(" << nf << ", " << n << ")]";
        throw std::invalid_argument(os.str());
    }
    const Eigen::Index m = n_components;

    FpcaModel model;
    model.grid = grid;
    model.mean_curve = Eigen::VectorXd::Zero(n);
    for (const auto& f : dataset.functions) {
        model.mean_curve += f.values;
    }
    model.mean_curve /= static_cast<double>(nf);

    Eigen::MatrixXd centered(nf, n);
    for (Eigen::Index i = 0; i < nf; ++i) {
        centered.row(i) =
            (dataset.functions[static_cast<std::size_t>(i)].values - model.mean_curve)
                .transpose();
    }
    const SymMatrix cov = SymMatrix::symmetrized(
        centered.transpose() * centered / static_cast<double>(nf));
    const SymEig eig = sym_eig(cov);

    // Operator eigenfunctions under 1/n quadrature are sqrt(n)-scaled
    // eigenvectors; scores are 1/n-weighted inner products.
    const double root_n = std::sqrt(static_cast<double>(n));
    model.components = root_n * eig.vectors.leftCols(m);
    Eigen::MatrixXd scores =
        centered * model.components / static_cast<double>(n);  // nf x M

    model.score_mean = scores.colwise().mean().transpose();
    Eigen::MatrixXd score_centered = scores.rowwise() - model.score_mean.transpose();
    if (nf >= 2) {
        model.score_cov = SymMatrix::symmetrized(
            score_centered.transpose() * score_centered / static_cast<double>(nf - 1));
    } else {
        model.score_cov = SymMatrix::zero(m);
    }
    return model;
}

FunctionalDataset fpca_sample(const FpcaModel& model, int n_functions, Rng& rng) {
    if (n_functions < 1) {
        throw std::invalid_argument("fpca_sample: need at least one function");
    }
    const Eigen::Index m = model.score_mean.size();
    const SymEig eig = sym_eig(model.score_cov);
    Eigen::MatrixXd factor =
        eig.vectors * eig.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();

    FunctionalDataset out;
    out.name = "fpca";
    out.functions.reserve(static_cast<std::size_t>(n_functions));
    for (int i = 0; i < n_functions; ++i) {
        Eigen::VectorXd z(m);
        for (Eigen::Index j = 0; j < m; ++j) {
            z(j) = rng.normal();
        }
        const Eigen::VectorXd scores = model.score_mean + factor * z;
        out.functions.emplace_back(model.grid,
                                   model.mean_curve + model.components * scores);
    }
    return out;
}

}  // namespace funcdiff
