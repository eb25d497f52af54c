#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "funcdiff/errors.hpp"
#include "funcdiff/numerics.hpp"
#include "funcdiff/rng.hpp"
#include "helpers.hpp"

using namespace funcdiff;
using testutil::max_abs_diff;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
    Eigen::MatrixXd m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

TEST_SUITE("numerics") {

TEST_CASE("SymMatrix construction enforces exact symmetry") {
    CHECK_NOTHROW(SymMatrix::from_symmetric(mat2(1, 2, 2, 5)));
    CHECK_THROWS_AS(SymMatrix::from_symmetric(mat2(1, 2, 2.0000001, 5)), std::invalid_argument);

    Eigen::MatrixXd a = mat2(1, 4, 2, 5);
    SymMatrix s = SymMatrix::symmetrized(a);
    CHECK(s(0, 1) == s(1, 0));
    CHECK(s(0, 1) == doctest::Approx(3.0));
}

TEST_CASE("cholesky of the identity is the identity") {
    SymMatrix id = SymMatrix::identity(2);
    Eigen::MatrixXd l = cholesky(id, 0.0);
    CHECK(max_abs_diff(l, Eigen::MatrixXd::Identity(2, 2)) == 0.0);
}

TEST_CASE("cholesky of a diagonal matrix takes square roots") {
    Eigen::MatrixXd l = cholesky(SymMatrix::from_symmetric(mat2(4, 0, 0, 9)), 0.0);
    CHECK(l(0, 0) == doctest::Approx(2.0));
    CHECK(l(1, 1) == doctest::Approx(3.0));
    CHECK(l(0, 1) == 0.0);
    CHECK(l(1, 0) == 0.0);
}

TEST_CASE("cholesky rejects a rank-deficient matrix at zero jitter") {
    CHECK_THROWS_AS(cholesky(SymMatrix::from_symmetric(mat2(1, 1, 1, 1)), 0.0),
                    NotPositiveDefinite);
}

TEST_CASE("cholesky factor reproduces m + jitter*I") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        int n = 2 + rep % 7;
        SymMatrix m = testutil::random_spd(n, rng);
        double jitter = (rep % 3 == 0) ? 0.0 : 1e-6;
        Eigen::MatrixXd l = cholesky(m, jitter);
        Eigen::MatrixXd rebuilt = l * l.transpose();
        Eigen::MatrixXd target = m.mat() + jitter * Eigen::MatrixXd::Identity(n, n);
        CHECK(max_abs_diff(rebuilt, target) <= 1e-12 * target.cwiseAbs().maxCoeff());
        // strictly lower output: everything above the diagonal is zero
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) CHECK(l(i, j) == 0.0);
    }
}

TEST_CASE("solve_spd identity and diagonal cases") {
    Eigen::VectorXd rhs(2);
    rhs << 3.0, -1.0;
    Eigen::VectorXd x = solve_spd(SymMatrix::identity(2), rhs, 0.0);
    CHECK(x(0) == doctest::Approx(3.0));
    CHECK(x(1) == doctest::Approx(-1.0));

    rhs << 2.0, 4.0;
    x = solve_spd(SymMatrix::from_symmetric(mat2(2, 0, 0, 4)), rhs, 0.0);
    CHECK(x(0) == doctest::Approx(1.0));
    CHECK(x(1) == doctest::Approx(1.0));
}

TEST_CASE("solve_spd multiplies back to the right-hand side") {
    Rng rng(12);
    for (int rep = 0; rep < 25; ++rep) {
        int n = 5;
        SymMatrix m = testutil::random_spd(n, rng);
        Eigen::VectorXd rhs = testutil::random_vector(n, rng);
        Eigen::VectorXd x = solve_spd(m, rhs, 0.0);
        double resid = (m.mat() * x - rhs).cwiseAbs().maxCoeff();
        CHECK(resid <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("sym_eig diagonal matrix") {
    SymEig e = sym_eig(SymMatrix::from_symmetric(mat2(3, 0, 0, 1)));
    CHECK(e.values(0) == doctest::Approx(3.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 1)) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(0.0));
}

TEST_CASE("sym_eig off-diagonal exchange matrix") {
    SymEig e = sym_eig(SymMatrix::from_symmetric(mat2(0, 1, 1, 0)));
    CHECK(e.values(0) == doctest::Approx(1.0));
    CHECK(e.values(1) == doctest::Approx(-1.0));
    double s = 1.0 / std::sqrt(2.0);
    // up to sign
    CHECK(std::abs(e.vectors(0, 0)) == doctest::Approx(s));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(s));
    CHECK(e.vectors(0, 0) * e.vectors(1, 0) > 0.0);  // same sign: direction (1,1)
    CHECK(e.vectors(0, 1) * e.vectors(1, 1) < 0.0);  // direction (1,-1)
}

TEST_CASE("sym_eig reconstruction, orthonormality, trace") {
    Rng rng(13);
    for (int rep = 0; rep < 15; ++rep) {
        int n = 6;
        Eigen::MatrixXd a(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
        SymMatrix m = SymMatrix::symmetrized(a);
        SymEig e = sym_eig(m);

        Eigen::MatrixXd rebuilt = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK(max_abs_diff(rebuilt, m.mat()) <= 1e-8);

        Eigen::MatrixXd gramian = e.vectors.transpose() * e.vectors;
        CHECK(max_abs_diff(gramian, Eigen::MatrixXd::Identity(n, n)) <= 1e-10);

        for (int j = 0; j + 1 < n; ++j) CHECK(e.values(j) >= e.values(j + 1));

        double trace = m.mat().trace();
        CHECK(std::abs(e.values.sum() - trace) <= 1e-8 * (1.0 + std::abs(trace)));

        for (int j = 0; j < n; ++j) {
            double resid =
                (m.mat() * e.vectors.col(j) - e.values(j) * e.vectors.col(j)).cwiseAbs().maxCoeff();
            CHECK(resid <= 1e-8 * (1.0 + std::abs(e.values(j))));
        }
    }
}

TEST_CASE("nearest_psd fixes PSD inputs and clips the exchange matrix") {
    Rng rng(14);
    SymMatrix spd = testutil::random_spd(4, rng);
    SymMatrix p = nearest_psd(spd.mat());
    CHECK(max_abs_diff(p.mat(), spd.mat()) <= 1e-10);

    SymMatrix q = nearest_psd(mat2(0, 1, 1, 0));
    Eigen::MatrixXd expected = 0.5 * mat2(1, 1, 1, 1);
    CHECK(max_abs_diff(q.mat(), expected) <= 1e-12);
}

TEST_CASE("nearest_psd is idempotent and PSD") {
    Rng rng(15);
    for (int rep = 0; rep < 10; ++rep) {
        Eigen::MatrixXd a(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) a(i, j) = 2.0 * rng.normal();
        SymMatrix p = nearest_psd(a);
        SymMatrix pp = nearest_psd(p.mat());
        CHECK(max_abs_diff(pp.mat(), p.mat()) <= 1e-10);
        SymEig e = sym_eig(p);
        CHECK(e.values.minCoeff() >= -1e-10);
    }
}

TEST_CASE("nearest_psd beats random PSD candidates in Frobenius norm") {
    Rng rng(16);
    Eigen::MatrixXd a(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
    // make it clearly non-symmetric and indefinite
    a(0, 1) += 2.0;
    a(1, 0) -= 2.0;
    a(2, 2) -= 3.0;

    SymMatrix p = nearest_psd(a);
    double best = (a - p.mat()).norm();
    for (int c = 0; c < 1000; ++c) {
        double scale = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
        Eigen::MatrixXd noise(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) noise(i, j) = scale * rng.normal();
        SymMatrix cand = nearest_psd(p.mat() + noise);  // projection keeps it PSD
        double dist = (a - cand.mat()).norm();
        CHECK(dist >= best - 1e-12);
    }
}

TEST_CASE("fd_operator textbook stencils on (0, 0.5, 1)") {
    Eigen::VectorXd grid(3);
    grid << 0.0, 0.5, 1.0;
    Eigen::MatrixXd d = fd_operator(grid);
    Eigen::MatrixXd expected(3, 3);
    expected << -2, 2, 0, -1, 0, 1, 0, -2, 2;
    CHECK(max_abs_diff(d, expected) == 0.0);

    Eigen::VectorXd ones_out = d * grid;  // f(x) = x
    for (int i = 0; i < 3; ++i) CHECK(ones_out(i) == 1.0);
    Eigen::VectorXd zero_out = d * Eigen::VectorXd::Constant(3, 7.5);
    for (int i = 0; i < 3; ++i) CHECK(zero_out(i) == 0.0);
}

TEST_CASE("fd_operator wide central stencil on a non-uniform grid") {
    Eigen::VectorXd grid(3);
    grid << 0.0, 0.1, 0.4;
    Eigen::MatrixXd d = fd_operator(grid);
    CHECK(d(1, 0) == doctest::Approx(-2.5));
    CHECK(d(1, 1) == 0.0);
    CHECK(d(1, 2) == doctest::Approx(2.5));
}

TEST_CASE("fd_operator is exact on affine samples for random monotone grids") {
    Rng rng(17);
    for (int rep = 0; rep < 10; ++rep) {
        int n = 2 + static_cast<int>(rng.uniform_int(0, 8));
        std::vector<double> g = testutil::random_sorted_grid(n, rng);
        Eigen::VectorXd grid = Eigen::Map<Eigen::VectorXd>(g.data(), n);
        Eigen::MatrixXd d = fd_operator(grid);
        double a = 3.0 * rng.normal();
        double b = rng.normal();
        Eigen::VectorXd samples = a * grid.array() + b;
        Eigen::VectorXd deriv = d * samples;
        for (int i = 0; i < n; ++i) CHECK(std::abs(deriv(i) - a) <= 1e-12 * (1.0 + std::abs(a)));
        Eigen::VectorXd constant = d * Eigen::VectorXd::Constant(n, b);
        for (int i = 0; i < n; ++i) CHECK(constant(i) == 0.0);
    }
}

TEST_CASE("fd_operator grid validation") {
    Eigen::VectorXd one(1);
    one << 0.0;
    CHECK_THROWS_AS(fd_operator(one), GridTooSmall);

    Eigen::VectorXd bad(3);
    bad << 0.0, 0.5, 0.5;
    CHECK_THROWS_AS(fd_operator(bad), NonMonotoneGrid);
    bad << 0.0, 0.6, 0.5;
    CHECK_THROWS_AS(fd_operator(bad), NonMonotoneGrid);
}

TEST_CASE("SpdFactor uses zero jitter when the matrix allows it") {
    SpdFactor f(SymMatrix::identity(4));
    CHECK(f.jitter_used() == 0.0);
    Eigen::VectorXd rhs(4);
    rhs << 1, 2, 3, 4;
    CHECK(max_abs_diff(Eigen::MatrixXd(f.solve(rhs)), Eigen::MatrixXd(rhs)) == 0.0);
}

TEST_CASE("SpdFactor escalates jitter on a singular PSD matrix") {
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(3, 3);
    SpdFactor f(SymMatrix::from_symmetric(ones));
    CHECK(f.jitter_used() > 0.0);
    Eigen::VectorXd rhs(3);
    rhs << 1, 1, 1;
    Eigen::VectorXd x = f.solve(rhs);
    CHECK(x.allFinite());
}

TEST_CASE("SpdFactor log determinant") {
    SpdFactor f(SymMatrix::from_symmetric(mat2(4, 0, 0, 9)));
    CHECK(f.log_det() == doctest::Approx(std::log(36.0)));
}

TEST_CASE("SpdFactor fails on a matrix jitter cannot rescue") {
    // zero diagonal means the escalation base is zero, so every rung fails
    CHECK_THROWS_AS(SpdFactor(SymMatrix::zero(3)), NotPositiveDefinite);
}

TEST_CASE("SpdFactor lower_times is a square root of m + jitter*I") {
    Rng rng(18);
    SymMatrix m = testutil::random_spd(5, rng);
    SpdFactor f(m);
    // accumulate L*L^T through unit vectors
    Eigen::MatrixXd rebuilt(5, 5);
    Eigen::MatrixXd l(5, 5);
    for (int j = 0; j < 5; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(5);
        e(j) = 1.0;
        l.col(j) = f.lower_times(e);
    }
    rebuilt = l * l.transpose();
    CHECK(max_abs_diff(rebuilt, m.mat()) <= 1e-10 * m.mat().cwiseAbs().maxCoeff());
}

TEST_CASE("solve_square_auto handles general systems and flags singular ones") {
    Rng rng(19);
    Eigen::MatrixXd a(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) a(i, j) = rng.normal();
    a += 4.0 * Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(4, 4);
    Eigen::MatrixXd x = solve_square_auto(a, rhs);
    CHECK(max_abs_diff(a * x, rhs) <= 1e-8);

    CHECK_THROWS_AS(solve_square_auto(Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 3)),
                    SingularOperator);
}

}  // TEST_SUITE
