#include "funcdiff/numerics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace funcdiff {

SymMatrix SymMatrix::from_symmetric(Eigen::MatrixXd m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("SymMatrix: matrix is not square");
    }
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
            if (m(i, j) != m(j, i)) {
                std::ostringstream os;
                os << "SymMatrix: entries (" << i << "," << j << ") differ: "
                   << m(i, j) << " vs " << m(j, i);
                throw std::invalid_argument(os.str());
            }
        }
    }
    return SymMatrix(std::move(m));
}

SymMatrix SymMatrix::symmetrized(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("SymMatrix: matrix is not square");
    }
    Eigen::MatrixXd m(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        m(i, i) = a(i, i);
        for (Eigen::Index j = i + 1; j < a.cols(); ++j) {
            const double v = 0.5 * (a(i, j) + a(j, i));
            m(i, j) = v;
            m(j, i) = v;
        }
    }
    return SymMatrix(std::move(m));
}

SymMatrix SymMatrix::identity(Eigen::Index n) {
    return SymMatrix(Eigen::MatrixXd::Identity(n, n));
}

SymMatrix SymMatrix::zero(Eigen::Index n) {
    return SymMatrix(Eigen::MatrixXd::Zero(n, n));
}

namespace {

Eigen::LLT<Eigen::MatrixXd> llt_or_throw(const SymMatrix& m, double jitter) {
    Eigen::MatrixXd a = m.mat();
    if (jitter != 0.0) {
        a.diagonal().array() += jitter;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        std::ostringstream os;
        os << "cholesky: matrix of size " << m.n()
           << " is not positive definite at jitter " << jitter;
        throw NotPositiveDefinite(os.str());
    }
    // Eigen can report Success on a trailing non-positive pivot for tiny
    // matrices; reject non-finite or non-positive diagonals explicitly.
    const auto& packed = llt.matrixLLT();
    for (Eigen::Index i = 0; i < packed.rows(); ++i) {
        if (!(packed(i, i) > 0.0) || !std::isfinite(packed(i, i))) {
            throw NotPositiveDefinite("cholesky: non-positive pivot");
        }
    }
    return llt;
}

}  // namespace

Eigen::MatrixXd cholesky(const SymMatrix& m, double jitter) {
    return Eigen::MatrixXd(llt_or_throw(m, jitter).matrixL());
}

Eigen::VectorXd solve_spd(const SymMatrix& m, const Eigen::VectorXd& rhs, double jitter) {
    if (rhs.size() != m.n()) {
        throw std::invalid_argument("solve_spd: rhs size does not match matrix");
    }
    return llt_or_throw(m, jitter).solve(rhs);
}

SymEig sym_eig(const SymMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.mat());
    if (es.info() != Eigen::Success) {
        throw NoConvergence("sym_eig: eigendecomposition did not converge");
    }
    const Eigen::Index n = m.n();
    SymEig out;
    out.values = es.eigenvalues().reverse();
    out.vectors.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        out.vectors.col(j) = es.eigenvectors().col(n - 1 - j);
    }
    return out;
}

SymMatrix nearest_psd(const Eigen::MatrixXd& a) {
    const SymMatrix sym = SymMatrix::symmetrized(a);
    SymEig eig = sym_eig(sym);
    Eigen::VectorXd clipped = eig.values.cwiseMax(0.0);
    Eigen::MatrixXd rebuilt =
        eig.vectors * clipped.asDiagonal() * eig.vectors.transpose();
    return SymMatrix::symmetrized(rebuilt);
}

void check_strictly_increasing(const Eigen::VectorXd& grid, const char* what) {
    for (Eigen::Index i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid(i) < grid(i + 1))) {
            std::ostringstream os;
            os << what << ": grid is not strictly increasing at index " << i
               << " (" << grid(i) << " then " << grid(i + 1) << ")";
            throw NonMonotoneGrid(os.str());
        }
    }
}

Eigen::MatrixXd fd_operator(const Eigen::VectorXd& grid) {
    const Eigen::Index n = grid.size();
    if (n < 2) {
        throw GridTooSmall("fd_operator: need at least 2 grid points");
    }
    check_strictly_increasing(grid, "fd_operator");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    d(0, 0) = -1.0 / (grid(1) - grid(0));
    d(0, 1) = 1.0 / (grid(1) - grid(0));
    d(n - 1, n - 2) = -1.0 / (grid(n - 1) - grid(n - 2));
    d(n - 1, n - 1) = 1.0 / (grid(n - 1) - grid(n - 2));
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        // Wide central difference (f(x_{i+1}) - f(x_{i-1})) / (x_{i+1} - x_{i-1});
        // annihilates constants and is exact on affine samples.
        const double span = grid(i + 1) - grid(i - 1);
        d(i, i - 1) = -1.0 / span;
        d(i, i + 1) = 1.0 / span;
    }
    return d;
}

double default_jitter(const SymMatrix& m) {
    return 1e-8 * m.mat().diagonal().mean();
}

SpdFactor::SpdFactor(const SymMatrix& m) {
    const double base = default_jitter(m);
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 9; ++attempt) {
        try {
            llt_ = llt_or_throw(m, jitter);
            jitter_ = jitter;
            return;
        } catch (const NotPositiveDefinite&) {
            if (attempt == 9 || !(base > 0.0)) {
                break;
            }
            jitter = (attempt == 0) ? base : 2.0 * jitter;
        }
    }
    std::ostringstream os;
    os << "SpdFactor: matrix of size " << m.n()
       << " not positive definite after jitter escalation (base " << base << ")";
    throw NotPositiveDefinite(os.str());
}

double SpdFactor::log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::VectorXd solve_spd_auto(const SymMatrix& m, const Eigen::VectorXd& rhs) {
    if (rhs.size() != m.n()) {
        throw std::invalid_argument("solve_spd_auto: rhs size does not match matrix");
    }
    return SpdFactor(m).solve(rhs);
}

Eigen::MatrixXd solve_square_auto(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs) {
    if (a.rows() != a.cols() || a.rows() != rhs.rows()) {
        throw std::invalid_argument("solve_square_auto: dimension mismatch");
    }
    const double base = 1e-8 * a.diagonal().cwiseAbs().mean();
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 9; ++attempt) {
        Eigen::MatrixXd aj = a;
        if (jitter != 0.0) {
            aj.diagonal().array() += jitter;
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(aj);
        if (lu.isInvertible()) {
            return lu.solve(rhs);
        }
        if (!(base > 0.0)) {
            break;
        }
        jitter = (attempt == 0) ? base : 2.0 * jitter;
    }
    throw SingularOperator("solve_square_auto: operator is singular");
}

}  // namespace funcdiff
