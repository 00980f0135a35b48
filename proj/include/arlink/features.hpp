#pragma once
// Linear feature maps of adjacency matrices, their adjoints, and the observable
// variance quantities that drive the data-driven smoothing parameters.
//
// Features are m x r matrices. The VAR convention is row-wise:
//     F(A_{t+1}) = F(A_t) W + noise,   W in R^{r x r}.
// An Omega-list with d matrices gives m = 1, r = d (row-vector features).
// A right projection A -> A V gives m = n, r = rank of V.

#include "arlink/matio.hpp"
#include "arlink/prox.hpp"
#include "arlink/types.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

namespace arlink {

struct OmegaList {
    std::vector<Matrix> omegas;
};

struct RightProjection {
    Matrix basis;  // n x r, orthonormal columns
};

class FeatureMap {
public:
    static constexpr double kOrthonormalTolerance = 1e-10;

    static FeatureMap omega_list(std::vector<Matrix> omegas) {
        if (omegas.empty()) throw DomainError("omega list must contain at least one matrix");
        const Index n = omegas.front().rows();
        for (std::size_t j = 0; j < omegas.size(); ++j) {
            if (omegas[j].rows() != n || omegas[j].cols() != n || n < 1) {
                throw DimensionError("omega " + std::to_string(j) + " is " +
                                     std::to_string(omegas[j].rows()) + "x" +
                                     std::to_string(omegas[j].cols()) + ", expected " +
                                     std::to_string(n) + "x" + std::to_string(n));
            }
        }
        return FeatureMap(OmegaList{std::move(omegas)});
    }

    static FeatureMap right_projection(Matrix basis) {
        if (basis.rows() < 1 || basis.cols() < 1 || basis.cols() > basis.rows()) {
            throw DimensionError("right projection basis must be n x r with 1 <= r <= n");
        }
        const Matrix gram = basis.transpose() * basis;
        const double err = (gram - Matrix::Identity(basis.cols(), basis.cols())).norm();
        if (!(err <= kOrthonormalTolerance)) {
            throw DomainError("right projection basis is not orthonormal (|V^T V - I|_F = " +
                              format_double(err) + ")");
        }
        return FeatureMap(RightProjection{std::move(basis)});
    }

    bool is_omega_list() const noexcept { return std::holds_alternative<OmegaList>(impl_); }
    const OmegaList& as_omega_list() const { return std::get<OmegaList>(impl_); }
    const RightProjection& as_right_projection() const { return std::get<RightProjection>(impl_); }

    Index n() const {
        return is_omega_list() ? as_omega_list().omegas.front().rows()
                               : as_right_projection().basis.rows();
    }
    Index feature_rows() const { return is_omega_list() ? 1 : n(); }
    Index feature_cols() const {
        return is_omega_list() ? static_cast<Index>(as_omega_list().omegas.size())
                               : as_right_projection().basis.cols();
    }
    /// Number of scalar features, m * r (d for an Omega-list).
    Index d_eff() const { return feature_rows() * feature_cols(); }

    Matrix apply(const Matrix& a) const {
        require_shape(a, n(), n(), "feature map input");
        if (is_omega_list()) {
            const auto& om = as_omega_list().omegas;
            Matrix out(1, static_cast<Index>(om.size()));
            for (std::size_t j = 0; j < om.size(); ++j) out(0, static_cast<Index>(j)) = inner(om[j], a);
            return out;
        }
        return a * as_right_projection().basis;
    }

    Matrix adjoint(const Matrix& x) const {
        require_shape(x, feature_rows(), feature_cols(), "feature map adjoint input");
        if (is_omega_list()) {
            const auto& om = as_omega_list().omegas;
            Matrix out = Matrix::Zero(n(), n());
            for (std::size_t j = 0; j < om.size(); ++j) out += x(0, static_cast<Index>(j)) * om[j];
            return out;
        }
        return x * as_right_projection().basis.transpose();
    }

    /// Equivalent Omega-list; a right projection V becomes {e_i v_j^T} ordered
    /// column-major over (i, j), matching the flattening of apply(A).
    std::vector<Matrix> omegas() const {
        if (is_omega_list()) return as_omega_list().omegas;
        const Matrix& v = as_right_projection().basis;
        std::vector<Matrix> out;
        out.reserve(static_cast<std::size_t>(v.rows() * v.cols()));
        for (Index j = 0; j < v.cols(); ++j) {
            for (Index i = 0; i < v.rows(); ++i) {
                Matrix om = Matrix::Zero(v.rows(), v.rows());
                om.row(i) = v.col(j).transpose();
                out.push_back(std::move(om));
            }
        }
        return out;
    }

private:
    explicit FeatureMap(std::variant<OmegaList, RightProjection> impl) : impl_(std::move(impl)) {}

    std::variant<OmegaList, RightProjection> impl_;
};

/// Top-r right singular vectors of the cumulative graph, as a right projection.
inline FeatureMap svd_feature_map(const Matrix& cumulative, Index rank) {
    if (rank < 1 || rank > cumulative.cols()) {
        throw DomainError("feature rank must lie in [1, n], got " + std::to_string(rank));
    }
    const Svd dec = svd(cumulative);
    return FeatureMap::right_projection(dec.V.leftCols(rank));
}

/// Stacked features of a sequence: rows of X_prev are F(A_0)..F(A_{T-1}),
/// rows of X_next are F(A_1)..F(A_T), each block m rows tall.
struct FeatureStack {
    Matrix x_prev;
    Matrix x_next;
    Matrix phi_last;  // F(A_T)
    Index horizon = 0;
};

inline FeatureStack build_feature_stack(const FeatureMap& map, const GraphSequence& seq) {
    if (map.n() != seq.n()) {
        throw DimensionError("feature map acts on " + std::to_string(map.n()) +
                             " nodes, sequence has " + std::to_string(seq.n()));
    }
    const Index m = map.feature_rows();
    const Index r = map.feature_cols();
    const Index horizon = seq.horizon();
    std::vector<Matrix> feats;
    feats.reserve(seq.size());
    for (const Matrix& a : seq.snapshots()) feats.push_back(map.apply(a));

    FeatureStack out;
    out.horizon = horizon;
    out.x_prev.resize(horizon * m, r);
    out.x_next.resize(horizon * m, r);
    for (Index t = 0; t < horizon; ++t) {
        out.x_prev.middleRows(t * m, m) = feats[static_cast<std::size_t>(t)];
        out.x_next.middleRows(t * m, m) = feats[static_cast<std::size_t>(t + 1)];
    }
    out.phi_last = feats.back();
    return out;
}

struct VarianceTerms {
    double v_op = 0.0;
    double v_inf = 0.0;
};

/// v_op^2 = |(1/d) sum W_j^T W_j|_op v |(1/d) sum W_j W_j^T|_op,
/// v_inf^2 = |(1/d) sum W_j o W_j|_inf, over the Omega-list form of the map.
inline VarianceTerms variance_terms(const FeatureMap& map) {
    const std::vector<Matrix> om = map.omegas();
    const Index n = map.n();
    const double d = static_cast<double>(om.size());
    Matrix left = Matrix::Zero(n, n);
    Matrix right = Matrix::Zero(n, n);
    Matrix hadamard = Matrix::Zero(n, n);
    for (const Matrix& w : om) {
        left.noalias() += w.transpose() * w;
        right.noalias() += w * w.transpose();
        hadamard += w.cwiseProduct(w);
    }
    left /= d;
    right /= d;
    hadamard /= d;
    // Both Gram sums are symmetric PSD: the operator norm is the top eigenvalue.
    auto top_eig = [](const Matrix& s) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
        return std::max(0.0, es.eigenvalues().maxCoeff());
    };
    VarianceTerms out;
    out.v_op = std::sqrt(std::max(top_eig(left), top_eig(right)));
    out.v_inf = std::sqrt(hadamard.maxCoeff());
    return out;
}

struct SequenceVariance {
    double sigma_omega = 0.0;
    double ell_t = 0.0;
};

/// sigma_omega^2 = max_j S_j / (T+1) and ell_T = 2 max_j log log(S_j/(T+1) v (T+1)/S_j v e)
/// with S_j = sum_{t=0}^{T} F_j(A_t)^2 over the flattened feature coordinates.
/// Coordinates with S_j = 0 carry no noise and contribute 0 to ell_T.
inline SequenceVariance sequence_variance(const FeatureMap& map, const GraphSequence& seq) {
    if (map.n() != seq.n()) throw DimensionError("sequence_variance: node count mismatch");
    Matrix sums = Matrix::Zero(map.feature_rows(), map.feature_cols());
    for (const Matrix& a : seq.snapshots()) sums += map.apply(a).cwiseAbs2();
    const double count = static_cast<double>(seq.size());
    double max_s = 0.0;
    double max_ll = 0.0;
    for (Index k = 0; k < sums.size(); ++k) {
        const double s = sums(k);
        max_s = std::max(max_s, s);
        if (s <= 0.0) continue;
        const double ratio = std::max({s / count, count / s, std::exp(1.0)});
        max_ll = std::max(max_ll, std::log(std::log(ratio)));
    }
    SequenceVariance out;
    out.sigma_omega = std::sqrt(max_s / count);
    out.ell_t = 2.0 * max_ll;
    return out;
}

// ---------------------------------------------------------------------------
// Directory persistence: manifest.json plus one MatrixMarket file per matrix.

inline void save_feature_map(const FeatureMap& map, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::ordered_json manifest;
    if (map.is_omega_list()) {
        const auto& om = map.as_omega_list().omegas;
        manifest["variant"] = "omega_list";
        std::vector<std::string> files;
        for (std::size_t j = 0; j < om.size(); ++j) {
            char name[32];
            std::snprintf(name, sizeof name, "omega_%04zu.mtx", j);
            write_matrix(om[j], dir / name);
            files.emplace_back(name);
        }
        manifest["files"] = files;
    } else {
        manifest["variant"] = "right_projection";
        manifest["files"] = std::vector<std::string>{"V.mtx"};
        write_matrix(map.as_right_projection().basis, dir / "V.mtx");
    }
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline FeatureMap load_feature_map(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("manifest.json", e.what());
    }
    const std::string variant = manifest.value("variant", "");
    if (!manifest.contains("files") || !manifest["files"].is_array()) {
        throw ConfigError("manifest.json.files", "missing file list");
    }
    std::vector<Matrix> mats;
    for (const auto& f : manifest["files"]) mats.push_back(read_matrix(dir / f.get<std::string>()));
    if (variant == "omega_list") return FeatureMap::omega_list(std::move(mats));
    if (variant == "right_projection") {
        if (mats.size() != 1) throw ConfigError("manifest.json.files", "expected exactly one file");
        return FeatureMap::right_projection(std::move(mats.front()));
    }
    throw ConfigError("manifest.json.variant", "unknown variant '" + variant + "'");
}

}  // namespace arlink
