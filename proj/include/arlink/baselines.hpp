#pragma once
// Link-scoring methods: common neighbours on the cumulative graph, the static
// sparse + low-rank fit, and the autoregressive estimator, behind one registry.

#include "arlink/features.hpp"
#include "arlink/matio.hpp"
#include "arlink/objective.hpp"
#include "arlink/solver.hpp"
#include "arlink/types.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace arlink {

/// Link scores; larger means a more likely edge.
struct ScoreMatrix {
    Matrix scores;
    bool include_diagonal = false;
};

enum class Method {
    NearestNeighbors,
    StaticSparseLowRank,
    StaticLowRank,
    AutoregressiveSparseLowRank,
    AutoregressiveLowRank,
};

inline constexpr std::array<Method, 5> kAllMethods{
    Method::NearestNeighbors, Method::StaticSparseLowRank, Method::StaticLowRank,
    Method::AutoregressiveSparseLowRank, Method::AutoregressiveLowRank};

inline std::string_view method_name(Method m) {
    switch (m) {
        case Method::NearestNeighbors: return "nn";
        case Method::StaticSparseLowRank: return "static-sparse-low-rank";
        case Method::StaticLowRank: return "static-low-rank";
        case Method::AutoregressiveSparseLowRank: return "autoregressive-sparse-low-rank";
        case Method::AutoregressiveLowRank: return "autoregressive-low-rank";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view name) {
    for (Method m : kAllMethods) {
        if (method_name(m) == name) return m;
    }
    return std::nullopt;
}

inline bool is_autoregressive(Method m) {
    return m == Method::AutoregressiveSparseLowRank || m == Method::AutoregressiveLowRank;
}
inline bool is_static(Method m) { return m == Method::StaticSparseLowRank || m == Method::StaticLowRank; }
inline bool has_penalties(Method m) { return m != Method::NearestNeighbors; }

/// Applies the registry contract: trace-only variants force gamma = 0,
/// static variants ignore kappa.
inline Penalties method_penalties(Method m, Penalties pen) {
    if (m == Method::StaticLowRank || m == Method::AutoregressiveLowRank) pen.gamma = 0.0;
    if (is_static(m)) pen.kappa = 0.0;
    if (m == Method::NearestNeighbors) pen.tau = pen.gamma = pen.kappa = 0.0;
    return pen;
}

inline Matrix cumulative(const GraphSequence& seq) {
    Matrix sum = Matrix::Zero(seq.n(), seq.n());
    for (const Matrix& a : seq.snapshots()) sum += a;
    return sum;
}

/// Common-neighbour counts (A~_T)^2 of the cumulative graph.
inline ScoreMatrix nn_score(const GraphSequence& seq) {
    const Matrix c = cumulative(seq);
    return ScoreMatrix{c * c};
}

/// |X - target|_F^2 as a smooth term with an empty W block.
class StaticQuadratic {
public:
    explicit StaticQuadratic(const Matrix& target) : target_(&target) {}

    Index a_rows() const { return target_->rows(); }
    Index a_cols() const { return target_->cols(); }
    Index w_rows() const { return 0; }
    Index w_cols() const { return 0; }
    double value(const Matrix& a, const Matrix&) const { return (a - *target_).squaredNorm(); }
    Gradient gradient(const Matrix& a, const Matrix&) const {
        return Gradient{2.0 * (a - *target_), Matrix::Zero(0, 0)};
    }
    double lipschitz() const { return 2.0; }

private:
    const Matrix* target_;
};

/// argmin_X |X - A~_T|_F^2 + tau |X|_* + gamma |X|_1 (over X >= 0 when enforced).
/// Unless cfg.step is set the step is 1/L: with a single simple term the
/// first iteration then lands on the exact prox of A~_T.
inline FitResult static_fit_result(const GraphSequence& seq, const Penalties& pen, const SolverConfig& cfg) {
    Penalties p = pen;
    p.kappa = 0.0;
    const Matrix target = cumulative(seq);
    const StaticQuadratic f(target);
    if (cfg.step > 0.0) return gfb_minimize(f, p, cfg);
    SolverConfig c = cfg;
    c.step = 1.0 / f.lipschitz();
    return gfb_minimize(f, p, c);
}

inline ScoreMatrix static_fit(const GraphSequence& seq, const Penalties& pen, const SolverConfig& cfg) {
    return ScoreMatrix{static_fit_result(seq, pen, cfg).a_hat};
}

inline ScoreMatrix autoregressive_score(const FitResult& fit) { return ScoreMatrix{fit.a_hat}; }

/// The autoregressive estimator with the feature map A -> A V, V the top
/// `feature_rank` right singular vectors of the cumulative graph.
inline FitResult autoregressive_fit(const GraphSequence& seq, Index feature_rank, const Penalties& pen,
                                    const SolverConfig& cfg) {
    const ProblemData data(svd_feature_map(cumulative(seq), feature_rank), seq);
    return gfb_minimize(data, pen, cfg);
}

/// Scores for any registered method. Penalties pass through method_penalties.
inline ScoreMatrix score_method(Method m, const GraphSequence& seq, const Penalties& pen,
                                const SolverConfig& cfg, Index feature_rank) {
    const Penalties p = method_penalties(m, pen);
    switch (m) {
        case Method::NearestNeighbors: return nn_score(seq);
        case Method::StaticSparseLowRank:
        case Method::StaticLowRank: return static_fit(seq, p, cfg);
        case Method::AutoregressiveSparseLowRank:
        case Method::AutoregressiveLowRank: return autoregressive_score(autoregressive_fit(seq, feature_rank, p, cfg));
    }
    throw DomainError("unknown method");
}

/// Smallest weights that make A = 0 (resp. W = 0) optimal for each term taken
/// alone; relative penalty grids are expressed as fractions of these.
inline Penalties penalty_scales(Method m, const GraphSequence& seq, Index feature_rank) {
    Penalties s;
    if (is_static(m)) {
        const Matrix g = 2.0 * cumulative(seq);
        s.tau = operator_norm(g);
        s.gamma = max_abs(g);
    } else if (is_autoregressive(m)) {
        const ProblemData data(svd_feature_map(cumulative(seq), feature_rank), seq);
        // W from ordinary least squares on the feature recursion.
        const Matrix w_ls = data.x_prev().colPivHouseholderQr().solve(data.x_next());
        const Gradient at_a0 = quad_gradient(Matrix::Zero(data.n(), data.n()), w_ls, data);
        s.tau = operator_norm(at_a0.a);
        s.gamma = max_abs(at_a0.a);
        const Gradient at_w0 = quad_gradient(Matrix::Zero(data.n(), data.n()),
                                             Matrix::Zero(data.r(), data.r()), data);
        s.kappa = max_abs(at_w0.w);
    }
    return method_penalties(m, s);
}

}  // namespace arlink
