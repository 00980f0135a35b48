#pragma once
// The joint prediction/VAR objective
//
//   L(A, W) = 1/(d T) |X_next - X_prev W|_F^2 + kappa |W|_1
//           + 1/d |F(A) - F(A_T) W|_F^2 + tau |A|_* + gamma |A|_1,
//
// with d = m r the number of scalar features. Phi denotes the two quadratic
// terms; its gradient and Hessian norm feed the splitting solver.

#include "arlink/features.hpp"
#include "arlink/matio.hpp"
#include "arlink/prox.hpp"
#include "arlink/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>

namespace arlink {

struct Penalties {
    double tau = 0.0;    // trace norm on A
    double gamma = 0.0;  // l1 on A
    double kappa = 0.0;  // l1 on W
    double alpha = 0.5;  // tau/gamma balance, used by the data-driven rule only

    void validate() const {
        if (!(tau >= 0.0) || !(gamma >= 0.0) || !(kappa >= 0.0)) {
            throw DomainError("penalties must be nonnegative");
        }
        if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    }

    double total() const noexcept { return tau + gamma + kappa; }
    bool operator==(const Penalties&) const = default;
};

/// Everything the objective needs from the observed sequence.
class ProblemData {
public:
    ProblemData(FeatureMap map, const GraphSequence& seq)
        : map_(std::move(map)), stack_(build_feature_stack(map_, seq)) {}

    ProblemData(FeatureMap map, FeatureStack stack) : map_(std::move(map)), stack_(std::move(stack)) {
        const Index m = map_.feature_rows();
        const Index r = map_.feature_cols();
        if (stack_.horizon < 1) throw DomainError("problem data needs T >= 1");
        require_shape(stack_.x_prev, stack_.horizon * m, r, "X_prev");
        require_shape(stack_.x_next, stack_.horizon * m, r, "X_next");
        require_shape(stack_.phi_last, m, r, "F(A_T)");
    }

    const FeatureMap& map() const noexcept { return map_; }
    const Matrix& x_prev() const noexcept { return stack_.x_prev; }
    const Matrix& x_next() const noexcept { return stack_.x_next; }
    const Matrix& phi_last() const noexcept { return stack_.phi_last; }
    Index n() const { return map_.n(); }
    Index m() const { return map_.feature_rows(); }
    Index r() const { return map_.feature_cols(); }
    Index horizon() const noexcept { return stack_.horizon; }
    double d_eff() const { return static_cast<double>(map_.d_eff()); }

    /// Same problem with every data matrix multiplied by c.
    ProblemData scaled(double c) const {
        FeatureStack s = stack_;
        s.x_prev *= c;
        s.x_next *= c;
        s.phi_last *= c;
        if (map_.is_omega_list()) {
            std::vector<Matrix> om = map_.as_omega_list().omegas;
            for (auto& w : om) w *= c;
            return ProblemData(FeatureMap::omega_list(std::move(om)), std::move(s));
        }
        // A right projection cannot be rescaled and stay orthonormal.
        throw DomainError("ProblemData::scaled requires an Omega-list feature map");
    }

private:
    FeatureMap map_;
    FeatureStack stack_;
};

struct Gradient {
    Matrix a;
    Matrix w;
};

inline void check_variables(const Matrix& a, const Matrix& w, const ProblemData& data) {
    require_shape(a, data.n(), data.n(), "A");
    require_shape(w, data.r(), data.r(), "W");
}

/// Phi(A, W), the smooth part of the objective.
inline double quad_loss(const Matrix& a, const Matrix& w, const ProblemData& data) {
    check_variables(a, w, data);
    const double d = data.d_eff();
    const double t = static_cast<double>(data.horizon());
    const double var_term = (data.x_next() - data.x_prev() * w).squaredNorm() / (d * t);
    const double pred_term = (data.map().apply(a) - data.phi_last() * w).squaredNorm() / d;
    return var_term + pred_term;
}

inline double penalty_value(const Matrix& a, const Matrix& w, const Penalties& pen) {
    double v = 0.0;
    if (pen.tau != 0.0) v += pen.tau * trace_norm(a);
    if (pen.gamma != 0.0) v += pen.gamma * l1_norm(a);
    if (pen.kappa != 0.0) v += pen.kappa * l1_norm(w);
    return v;
}

inline double loss(const Matrix& a, const Matrix& w, const ProblemData& data, const Penalties& pen) {
    pen.validate();
    return quad_loss(a, w, data) + penalty_value(a, w, pen);
}

inline Gradient quad_gradient(const Matrix& a, const Matrix& w, const ProblemData& data) {
    check_variables(a, w, data);
    const double d = data.d_eff();
    const double t = static_cast<double>(data.horizon());
    const Matrix pred_residual = data.map().apply(a) - data.phi_last() * w;
    const Matrix var_residual = data.x_next() - data.x_prev() * w;
    Gradient g;
    g.a = (2.0 / d) * data.map().adjoint(pred_residual);
    g.w = -(2.0 / (d * t)) * (data.x_prev().transpose() * var_residual) -
          (2.0 / d) * (data.phi_last().transpose() * pred_residual);
    return g;
}

/// Hessian of Phi applied to a direction (dA, dW); Phi is quadratic, so this
/// does not depend on the base point.
inline Gradient quad_hessian_apply(const Matrix& da, const Matrix& dw, const ProblemData& data) {
    const double d = data.d_eff();
    const double t = static_cast<double>(data.horizon());
    const Matrix pred = data.map().apply(da) - data.phi_last() * dw;
    Gradient h;
    h.a = (2.0 / d) * data.map().adjoint(pred);
    h.w = (2.0 / (d * t)) * (data.x_prev().transpose() * (data.x_prev() * dw)) -
          (2.0 / d) * (data.phi_last().transpose() * pred);
    return h;
}

struct Truth {
    Matrix a_next;  // A_{T+1}
    Matrix w0;
};

/// Mixed prediction/estimation error E(A, W) (the square root of E^2).
inline double error_metric(const Matrix& a, const Matrix& w, const Truth& truth,
                           const ProblemData& data) {
    check_variables(a, w, data);
    require_same_shape(a, truth.a_next, "truth A_{T+1}");
    require_same_shape(w, truth.w0, "truth W0");
    const double d = data.d_eff();
    const double t = static_cast<double>(data.horizon());
    const Matrix dw = w - truth.w0;
    const double pred = (data.phi_last() * dw - data.map().apply(a - truth.a_next)).squaredNorm() / d;
    const double est = (data.x_prev() * dw).squaredNorm() / (d * t);
    return std::sqrt(pred + est);
}

struct LipschitzOptions {
    double rel_tol = 1e-8;
    int max_iter = 10000;
    double inflation = 1.01;
    std::uint64_t seed = 0x5eed;
};

namespace detail {

/// Largest eigenvalue of a positive semidefinite operator on (A, W) pairs by
/// power iteration from a seeded Gaussian start, inflated by opt.inflation.
/// Returns 0 when the operator vanishes.
template <class Apply>
double power_iteration(Index n, Index r, Apply apply, const LipschitzOptions& opt) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix a(n, n);
    Matrix w(r, r);
    for (Index k = 0; k < a.size(); ++k) a(k) = gauss(rng);
    for (Index k = 0; k < w.size(); ++k) w(k) = gauss(rng);

    auto norm2 = [](const Matrix& x, const Matrix& y) {
        return std::sqrt(x.squaredNorm() + y.squaredNorm());
    };
    double nrm = norm2(a, w);
    a /= nrm;
    w /= nrm;
    double rayleigh = 0.0;
    for (int it = 0; it < opt.max_iter; ++it) {
        const Gradient h = apply(a, w);
        const double next = inner(a, h.a) + inner(w, h.w);
        nrm = norm2(h.a, h.w);
        if (!std::isfinite(nrm)) throw NumericalError("lipschitz: power iteration produced non-finite values");
        if (nrm == 0.0) return 0.0;
        const bool done = it > 0 && std::abs(next - rayleigh) <= opt.rel_tol * std::abs(next);
        rayleigh = next;
        if (done) return opt.inflation * rayleigh;
        a = h.a / nrm;
        w = h.w / nrm;
    }
    throw NumericalError("lipschitz: power iteration stagnated after " +
                         std::to_string(opt.max_iter) + " iterations");
}

}  // namespace detail

/// Largest eigenvalue of P^1/2 H P^1/2, H the Hessian of Phi and
/// P = diag(I_A, w_weight I_W), inflated by 1%. With w_weight = 1 this is the
/// Lipschitz constant of the gradient of Phi.
inline double lipschitz(const ProblemData& data, double w_weight = 1.0, const LipschitzOptions& opt = {}) {
    if (!(w_weight > 0.0)) throw DomainError("lipschitz: w_weight must be > 0");
    const double s = std::sqrt(w_weight);
    return detail::power_iteration(
        data.n(), data.r(),
        [&](const Matrix& a, const Matrix& w) {
            Gradient h = quad_hessian_apply(a, s * w, data);
            h.w *= s;
            return h;
        },
        opt);
}

/// Largest eigenvalues of the two diagonal blocks of the Hessian of Phi.
inline std::pair<double, double> block_lipschitz(const ProblemData& data, const LipschitzOptions& opt = {}) {
    const Matrix zero_a = Matrix::Zero(data.n(), data.n());
    const Matrix zero_w = Matrix::Zero(data.r(), data.r());
    const double la = detail::power_iteration(
        data.n(), 0, [&](const Matrix& a, const Matrix&) { return Gradient{quad_hessian_apply(a, zero_w, data).a, Matrix::Zero(0, 0)}; },
        opt);
    const double lw = detail::power_iteration(
        0, data.r(), [&](const Matrix&, const Matrix& w) { return Gradient{Matrix::Zero(0, 0), quad_hessian_apply(zero_a, w, data).w}; },
        opt);
    return {la, lw};
}

}  // namespace arlink
