#pragma once

#include <Eigen/Dense>

#include "funcdiff/errors.hpp"

namespace funcdiff {

// Dense symmetric matrix. Construction enforces exact (bitwise) symmetry:
// either the input already is symmetric, or the caller asks for the explicit
// symmetric part. Nothing symmetrizes silently.
class SymMatrix {
public:
    // Requires entries(i,j) == entries(j,i) exactly; throws std::invalid_argument otherwise.
    static SymMatrix from_symmetric(Eigen::MatrixXd m);

    // Explicit symmetric part 0.5*(a + a^T), with both triangles assigned the
    // same computed value.
    static SymMatrix symmetrized(const Eigen::MatrixXd& a);

    static SymMatrix identity(Eigen::Index n);
    static SymMatrix zero(Eigen::Index n);

    Eigen::Index n() const { return mat_.rows(); }
    const Eigen::MatrixXd& mat() const { return mat_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }

private:
    explicit SymMatrix(Eigen::MatrixXd m) : mat_(std::move(m)) {}
    Eigen::MatrixXd mat_;
};

// Lower-triangular L with L*L^T = m + jitter*I. Throws NotPositiveDefinite
// when a pivot is <= 0 at this jitter level.
Eigen::MatrixXd cholesky(const SymMatrix& m, double jitter);

// Solves (m + jitter*I) x = rhs through the Cholesky factorization.
Eigen::VectorXd solve_spd(const SymMatrix& m, const Eigen::VectorXd& rhs, double jitter);

struct SymEig {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // orthonormal columns, vectors.col(j) pairs with values(j)
};

SymEig sym_eig(const SymMatrix& m);

// Projection onto the symmetric PSD cone in Frobenius norm: symmetric part,
// spectral decomposition, negative eigenvalues clipped to zero.
SymMatrix nearest_psd(const Eigen::MatrixXd& a);

// First-order differentiation matrix on a strictly increasing grid: two-point
// forward stencil in the first row, two-point backward stencil in the last,
// non-uniform central stencils on the interior.
Eigen::MatrixXd fd_operator(const Eigen::VectorXd& grid);

void check_strictly_increasing(const Eigen::VectorXd& grid, const char* what);

// Jitter escalation: try jitter 0, then 1e-8 * mean(diag), doubling up to
// 8 times. Kernel Gram matrices on fine grids are numerically rank-deficient,
// so callers that invert them go through this policy.
double default_jitter(const SymMatrix& m);

// Cholesky factorization obtained through the escalation policy; keeps the
// factor for repeated solves and sampling transforms.
class SpdFactor {
public:
    explicit SpdFactor(const SymMatrix& m);

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
    Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }
    Eigen::VectorXd lower_times(const Eigen::VectorXd& z) const { return llt_.matrixL() * z; }
    double log_det() const;
    double jitter_used() const { return jitter_; }
    Eigen::Index n() const { return llt_.matrixLLT().rows(); }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double jitter_ = 0.0;
};

Eigen::VectorXd solve_spd_auto(const SymMatrix& m, const Eigen::VectorXd& rhs);

// LU solve of a general square system a * x = rhs under the same jitter
// ladder; throws SingularOperator when (a + jitter*I) stays singular.
Eigen::MatrixXd solve_square_auto(const Eigen::MatrixXd& a, const Eigen::MatrixXd& rhs);

}  // namespace funcdiff
