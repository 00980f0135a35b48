#pragma once
// Proximal maps of the l1 and trace norms, the nonnegative projection, and the
// SVD-based tangent-space projectors.

#include "arlink/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace arlink {

/// Thin SVD with a reproducible sign convention: in every column of U the
/// entry of largest magnitude (lowest row index on ties) is nonnegative.
struct Svd {
    Matrix U;
    Vector singular_values;  // descending, nonnegative
    Matrix V;

    Matrix reconstruct() const {
        return U * singular_values.asDiagonal() * V.transpose();
    }
};

inline Svd svd(const Matrix& z) {
    if (!z.allFinite()) throw NumericalError("svd: input has non-finite entries");
    Svd out;
    const Index k = std::min(z.rows(), z.cols());
    if (k == 0) {
        out.U = Matrix::Zero(z.rows(), 0);
        out.V = Matrix::Zero(z.cols(), 0);
        out.singular_values = Vector::Zero(0);
        return out;
    }
    {
        Eigen::BDCSVD<Matrix> dec(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (dec.info() == Eigen::Success) {
            out.U = dec.matrixU();
            out.V = dec.matrixV();
            out.singular_values = dec.singularValues();
        }
    }
    // BDCSVD can return NaNs on some nearly degenerate inputs; Jacobi is slower but robust.
    if (out.U.size() == 0 || !out.U.allFinite() || !out.V.allFinite() || !out.singular_values.allFinite()) {
        Eigen::JacobiSVD<Matrix> dec(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (dec.info() != Eigen::Success) throw NumericalError("svd: decomposition did not converge");
        out.U = dec.matrixU();
        out.V = dec.matrixV();
        out.singular_values = dec.singularValues();
    }
    if (!out.U.allFinite() || !out.V.allFinite() || !out.singular_values.allFinite()) {
        throw NumericalError("svd: decomposition produced non-finite factors");
    }
    for (Index c = 0; c < k; ++c) {
        Index pivot = 0;
        double best = -1.0;
        for (Index r = 0; r < out.U.rows(); ++r) {
            const double a = std::abs(out.U(r, c));
            if (a > best) {
                best = a;
                pivot = r;
            }
        }
        if (out.U(pivot, c) < 0.0) {
            out.U.col(c) = -out.U.col(c);
            out.V.col(c) = -out.V.col(c);
        }
    }
    return out;
}

inline Vector singular_values(const Matrix& z) {
    if (z.size() == 0) return Vector::Zero(0);
    Eigen::BDCSVD<Matrix> dec(z);
    if (dec.info() == Eigen::Success && dec.singularValues().allFinite()) return dec.singularValues();
    Eigen::JacobiSVD<Matrix> jac(z);
    if (jac.info() != Eigen::Success || !jac.singularValues().allFinite()) {
        throw NumericalError("svd: decomposition did not converge");
    }
    return jac.singularValues();
}

inline double operator_norm(const Matrix& z) {
    if (z.size() == 0) return 0.0;
    return singular_values(z)(0);
}

inline double trace_norm(const Matrix& z) { return singular_values(z).sum(); }

inline double l1_norm(const Matrix& z) { return z.cwiseAbs().sum(); }

inline double max_abs(const Matrix& z) { return z.size() == 0 ? 0.0 : z.cwiseAbs().maxCoeff(); }

/// Entrywise soft thresholding sign(z)(|z| - lambda)_+.
inline Matrix prox_l1(const Matrix& z, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("prox_l1: lambda must be >= 0");
    if (lambda == 0.0) return z;
    return z.unaryExpr([lambda](double v) {
        if (v > lambda) return v - lambda;
        if (v < -lambda) return v + lambda;
        return 0.0;
    });
}

/// Singular value shrinkage U diag((s_i - lambda)_+) V^T.
inline Matrix prox_trace(const Matrix& z, double lambda) {
    if (!(lambda >= 0.0)) throw DomainError("prox_trace: lambda must be >= 0");
    if (lambda == 0.0) return z;
    const Svd dec = svd(z);
    Index keep = 0;
    while (keep < dec.singular_values.size() && dec.singular_values(keep) > lambda) ++keep;
    if (keep == 0) return Matrix::Zero(z.rows(), z.cols());
    const Vector shrunk = (dec.singular_values.head(keep).array() - lambda).matrix();
    return dec.U.leftCols(keep) * shrunk.asDiagonal() * dec.V.leftCols(keep).transpose();
}

/// Euclidean projection onto the nonnegative orthant.
inline Matrix project_nonneg(const Matrix& z) { return z.cwiseMax(0.0); }

struct SubspaceSplit {
    Matrix parallel;
    Matrix orthogonal;
};

/// Splits B into its component in the tangent space of A,
/// P_U B + B P_V - P_U B P_V, and the remainder (I - P_U) B (I - P_V).
/// Singular values at or below 1e-10 * sigma_max of A count as zero.
inline SubspaceSplit subspace_projectors(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "subspace_projectors");
    const Svd dec = svd(a);
    if (dec.singular_values.size() == 0 ||
        !(dec.singular_values(0) > std::numeric_limits<double>::min())) {
        throw DomainError("subspace_projectors: A is numerically zero");
    }
    const double cutoff = 1e-10 * dec.singular_values(0);
    Index rank = 0;
    while (rank < dec.singular_values.size() && dec.singular_values(rank) > cutoff) ++rank;
    const Matrix u = dec.U.leftCols(rank);
    const Matrix v = dec.V.leftCols(rank);
    // (I - P_U) B (I - P_V), evaluated without forming the n x n projectors.
    const Matrix left = b - u * (u.transpose() * b);
    Matrix orthogonal = left - (left * v) * v.transpose();
    SubspaceSplit out;
    out.parallel = b - orthogonal;
    out.orthogonal = std::move(orthogonal);
    return out;
}

}  // namespace arlink
