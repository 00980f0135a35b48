#include "arlink/prox.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace arlink;
using testing_support::gaussian;

namespace {

// argmin_x 0.5 (x - z)^2 + lambda |x| by a dense grid followed by golden-section refinement.
double scalar_prox_brute(double z, double lambda) {
    auto f = [&](double x) { return 0.5 * (x - z) * (x - z) + lambda * std::abs(x); };
    const double lo = -std::abs(z) - 1.0, hi = std::abs(z) + 1.0;
    double best = lo;
    const int grid = 4000;
    for (int i = 0; i <= grid; ++i) {
        const double x = lo + (hi - lo) * i / grid;
        if (f(x) < f(best)) best = x;
    }
    double a = best - (hi - lo) / grid, b = best + (hi - lo) / grid;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 200; ++it) {
        const double c = b - phi * (b - a), d = a + phi * (b - a);
        if (f(c) < f(d)) b = d;
        else a = c;
    }
    const double x = 0.5 * (a + b);
    return f(0.0) <= f(x) ? 0.0 : x;
}

double trace_objective(const Matrix& x, const Matrix& z, double lambda) {
    return 0.5 * (x - z).squaredNorm() + lambda * trace_norm(x);
}

}  // namespace

TEST_CASE("prox_l1 componentwise formula") {
    Matrix z(2, 2);
    z << 2, -0.5, 0.3, -3;
    Matrix expected(2, 2);
    expected << 1, 0, 0, -2;
    CHECK(prox_l1(z, 1.0) == expected);
}

TEST_CASE("prox_l1 with zero weight is the identity") {
    std::mt19937_64 rng(1);
    const Matrix z = gaussian(4, 3, rng);
    CHECK(prox_l1(z, 0.0) == z);
}

TEST_CASE("prox_l1 rejects a negative weight") {
    CHECK_THROWS_AS(prox_l1(Matrix::Ones(2, 2), -0.1), DomainError);
}

TEST_CASE("prox_l1 maps |z| = lambda to exactly zero") {
    Matrix z(1, 2);
    z << 0.7, -0.7;
    CHECK(prox_l1(z, 0.7) == Matrix::Zero(1, 2));
}

TEST_CASE("prox_l1 agrees with a scalar brute-force minimizer") {
    std::mt19937_64 rng(2);
    const Matrix z = gaussian(3, 3, rng);
    const Matrix p = prox_l1(z, 0.7);
    for (Index k = 0; k < z.size(); ++k) CHECK(std::abs(p(k) - scalar_prox_brute(z(k), 0.7)) < 1e-7);
}

TEST_CASE("prox_l1 residual is clipped to [-lambda, lambda]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix z = gaussian(5, 4, rng, 2.0);
        const Matrix r = z - prox_l1(z, 0.6);
        CHECK(r.cwiseAbs().maxCoeff() <= 0.6 + 1e-15);
    }
}

TEST_CASE("prox_trace on a diagonal matrix shrinks the diagonal") {
    const Matrix z = Eigen::Vector3d(3, 1, 0.2).asDiagonal().toDenseMatrix();
    const Matrix expected = Eigen::Vector3d(2.5, 0.5, 0).asDiagonal().toDenseMatrix();
    CHECK((prox_trace(z, 0.5) - expected).norm() < 1e-12);
}

TEST_CASE("prox_trace of zero is zero") {
    CHECK(prox_trace(Matrix::Zero(3, 3), 0.4).norm() == 0.0);
}

TEST_CASE("prox_trace rejects a negative weight") {
    CHECK_THROWS_AS(prox_trace(Matrix::Ones(2, 2), -1.0), DomainError);
}

TEST_CASE("prox_trace is optimal against random perturbations") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Matrix z = gaussian(4, 4, rng);
    const double lambda = 0.8;
    const Matrix x = prox_trace(z, lambda);
    const double at_x = trace_objective(x, z, lambda);
    for (int trial = 0; trial < 1000; ++trial) {
        Matrix delta = gaussian(4, 4, rng);
        delta *= 0.1 * u(rng) / delta.norm();
        CHECK(at_x <= trace_objective(x + delta, z, lambda) + 1e-12);
    }
}

TEST_CASE("prox_trace singular values and rank") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix z = gaussian(6, 3, rng) * gaussian(3, 6, rng);  // rank 3
        const Vector sz = singular_values(z);
        const Vector sp = singular_values(prox_trace(z, 0.5));
        for (Index i = 0; i < sp.size(); ++i) CHECK(sp(i) <= std::max(sz(i) - 0.5, 0.0) + 1e-10);
        Index rank = 0;
        for (Index i = 0; i < sp.size(); ++i) rank += sp(i) > 1e-10 * std::max(1.0, sp(0)) ? 1 : 0;
        CHECK(rank <= 3);
    }
}

TEST_CASE("proxes commute with transposition") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix z = gaussian(5, 3, rng);
        CHECK(prox_l1(z.transpose(), 0.3) == prox_l1(z, 0.3).transpose());
        CHECK((prox_trace(z.transpose(), 0.3) - prox_trace(z, 0.3).transpose()).norm() < 1e-12);
    }
}

TEST_CASE("proxes are nonexpansive") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Matrix x = gaussian(5, 5, rng), y = gaussian(5, 5, rng);
        const double d = (x - y).norm();
        CHECK((prox_l1(x, 0.4) - prox_l1(y, 0.4)).norm() <= d + 1e-12);
        CHECK((prox_trace(x, 0.4) - prox_trace(y, 0.4)).norm() <= d + 1e-12);
        CHECK((project_nonneg(x) - project_nonneg(y)).norm() <= d + 1e-12);
    }
}

TEST_CASE("project_nonneg examples") {
    Matrix z(1, 2);
    z << -1, 2;
    Matrix e(1, 2);
    e << 0, 2;
    CHECK(project_nonneg(z) == e);
    const Matrix pos = Matrix::Constant(3, 3, 0.25);
    CHECK(project_nonneg(pos) == pos);
}

TEST_CASE("project_nonneg is the closest nonnegative point") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const Matrix z = gaussian(4, 4, rng);
        const Matrix x = gaussian(4, 4, rng).cwiseAbs();
        CHECK((project_nonneg(z) - z).norm() <= (x - z).norm() + 1e-15);
    }
}

TEST_CASE("svd factors are orthonormal, reconstruct the input and follow the sign convention") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix z = gaussian(7, 5, rng);
        const Svd s = svd(z);
        CHECK((s.U.transpose() * s.U - Matrix::Identity(5, 5)).norm() < 1e-9);
        CHECK((s.V.transpose() * s.V - Matrix::Identity(5, 5)).norm() < 1e-9);
        CHECK((s.reconstruct() - z).norm() <= 1e-8 * z.norm());
        for (Index i = 1; i < s.singular_values.size(); ++i) CHECK(s.singular_values(i - 1) >= s.singular_values(i));
        for (Index c = 0; c < s.U.cols(); ++c) {
            Index pivot = 0;
            for (Index r = 1; r < s.U.rows(); ++r) {
                if (std::abs(s.U(r, c)) > std::abs(s.U(pivot, c))) pivot = r;
            }
            CHECK(s.U(pivot, c) >= 0.0);
        }
    }
}

TEST_CASE("svd is deterministic") {
    std::mt19937_64 rng(10);
    const Matrix z = gaussian(6, 6, rng);
    const Svd a = svd(z), b = svd(z);
    CHECK(a.U == b.U);
    CHECK(a.V == b.V);
    CHECK(a.singular_values == b.singular_values);
}

TEST_CASE("svd rejects non-finite input") {
    Matrix z = Matrix::Ones(2, 2);
    z(0, 1) = std::nan("");
    CHECK_THROWS_AS(svd(z), NumericalError);
}

TEST_CASE("norms on a diagonal matrix") {
    const Matrix z = Eigen::Vector3d(-3, 1, 0.5).asDiagonal().toDenseMatrix();
    CHECK(operator_norm(z) == Catch::Approx(3.0));
    CHECK(trace_norm(z) == Catch::Approx(4.5));
    CHECK(l1_norm(z) == 4.5);
    CHECK(max_abs(z) == 3.0);
}

TEST_CASE("subspace projectors: B = A") {
    std::mt19937_64 rng(11);
    const Matrix a = gaussian(5, 2, rng) * gaussian(2, 5, rng);
    const SubspaceSplit s = subspace_projectors(a, a);
    CHECK((s.parallel - a).norm() < 1e-10);
    CHECK(s.orthogonal.norm() < 1e-10);
}

TEST_CASE("subspace projectors: orthogonal supports") {
    Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
    a(0, 0) = 1;
    b(1, 1) = 1;
    const SubspaceSplit s = subspace_projectors(a, b);
    CHECK(s.parallel.norm() < 1e-14);
    CHECK((s.orthogonal - b).norm() < 1e-14);
}

TEST_CASE("subspace projectors decompose B and are idempotent") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = gaussian(5, 2, rng) * gaussian(2, 5, rng);
        const Matrix b = gaussian(5, 5, rng);
        const SubspaceSplit s = subspace_projectors(a, b);
        CHECK((s.parallel + s.orthogonal - b).norm() < 1e-12);
        const SubspaceSplit twice_par = subspace_projectors(a, s.parallel);
        const SubspaceSplit twice_orth = subspace_projectors(a, s.orthogonal);
        CHECK((twice_par.parallel - s.parallel).norm() < 1e-10);
        CHECK((twice_orth.orthogonal - s.orthogonal).norm() < 1e-10);
    }
}

TEST_CASE("subspace projectors reject a zero matrix") {
    CHECK_THROWS_AS(subspace_projectors(Matrix::Zero(3, 3), Matrix::Ones(3, 3)), DomainError);
}
