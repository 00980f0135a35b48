#pragma once
// Smoothing-parameter selection: the closed-form data-driven rule, K-fold
// cross-validation over a grid, and a Monte Carlo check of the three noise
// concentration bounds the rule is built on.

#include "arlink/auc.hpp"
#include "arlink/baselines.hpp"
#include "arlink/features.hpp"
#include "arlink/matio.hpp"
#include "arlink/objective.hpp"
#include "arlink/parallel.hpp"
#include "arlink/rng.hpp"
#include "arlink/solver.hpp"
#include "arlink/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace arlink {

/// tau   = 3 alpha sigma v_op sqrt(2 (x + log 2n) / d)
/// gamma = 3 (1 - alpha) sigma v_inf sqrt(2 (x + 2 log n) / d)
/// kappa = 6 sigma sigma_omega / d * sqrt(2 e (x + 2 log d + ell_T) / (T + 1))
inline Penalties theorem3_params(const FeatureMap& map, const GraphSequence& seq, double sigma,
                                 double alpha, double x) {
    if (!(sigma > 0.0)) throw DomainError("theorem3_params: sigma must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("theorem3_params: alpha must lie in (0, 1)");
    if (!(x > 0.0)) throw DomainError("theorem3_params: x must be > 0");
    const VarianceTerms v = variance_terms(map);
    const SequenceVariance sv = sequence_variance(map, seq);
    const double n = static_cast<double>(map.n());
    const double d = static_cast<double>(map.d_eff());
    const double t1 = static_cast<double>(seq.horizon()) + 1.0;
    Penalties p;
    p.alpha = alpha;
    p.tau = 3.0 * alpha * sigma * v.v_op * std::sqrt(2.0 * (x + std::log(2.0 * n)) / d);
    p.gamma = 3.0 * (1.0 - alpha) * sigma * v.v_inf * std::sqrt(2.0 * (x + 2.0 * std::log(n)) / d);
    p.kappa = 6.0 * sigma * sv.sigma_omega / d *
              std::sqrt(2.0 * std::numbers::e * (x + 2.0 * std::log(d) + sv.ell_t) / t1);
    return p;
}

/// Heuristic noise level: root mean square of the one-step feature residuals
/// X_next - X_prev W under the least-squares W.
inline double estimate_sigma(const ProblemData& data) {
    const Matrix w_ls = data.x_prev().colPivHouseholderQr().solve(data.x_next());
    const Matrix res = data.x_next() - data.x_prev() * w_ls;
    return std::sqrt(res.squaredNorm() / static_cast<double>(res.size()));
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvCell {
    Penalties penalties;
    double mean_auc = 0.0;
    int folds_used = 0;
};

struct CvResult {
    Penalties best;
    std::size_t best_index = 0;
    std::vector<CvCell> table;
    std::vector<std::string> warnings;
};

/// Assigns each off-diagonal position of an n x n matrix to one of `folds`
/// folds after a seeded shuffle.
inline std::vector<std::vector<std::pair<Index, Index>>> fold_partition(Index n, int folds,
                                                                        std::uint64_t seed) {
    if (folds < 2) throw DomainError("cross-validation needs at least 2 folds");
    auto positions = off_diagonal_positions(n);
    Rng rng(seed);
    std::shuffle(positions.begin(), positions.end(), rng);
    std::vector<std::vector<std::pair<Index, Index>>> out(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < positions.size(); ++i) out[i % out.size()].push_back(positions[i]);
    return out;
}

/// Copy of the sequence with the given entries of the last snapshot set to 0.
inline GraphSequence mask_last(const GraphSequence& seq, const std::vector<std::pair<Index, Index>>& held_out) {
    std::vector<Matrix> snaps = seq.snapshots();
    for (const auto& [i, j] : held_out) snaps.back()(i, j) = 0.0;
    return GraphSequence(std::move(snaps));
}

/// Picks the grid cell with the best mean held-out AUC. Held-out entries of
/// A_T are zeroed before refitting; AUC is measured on those entries against
/// A_T binarized at `threshold`. Ties go to the smallest tau+gamma+kappa, then
/// to grid order.
inline CvResult cross_validate(Method method, const GraphSequence& seq, const std::vector<Penalties>& grid,
                               int folds, std::uint64_t seed, const SolverConfig& cfg, Index feature_rank,
                               double threshold = 1e-6, int jobs = 1) {
    if (grid.empty()) throw DomainError("cross_validate: empty grid");
    const auto partition = fold_partition(seq.n(), folds, seed);
    const Matrix& truth = seq.last();

    CvResult out;
    std::vector<std::size_t> usable;
    for (std::size_t k = 0; k < partition.size(); ++k) {
        std::size_t pos = 0;
        for (const auto& [i, j] : partition[k]) pos += truth(i, j) > threshold ? 1 : 0;
        if (pos == 0 || pos == partition[k].size()) {
            out.warnings.push_back("fold " + std::to_string(k) + " skipped: single-class truth");
        } else {
            usable.push_back(k);
        }
    }
    if (usable.empty()) throw DomainError("cross_validate: every fold has single-class truth");

    std::vector<GraphSequence> masked;
    masked.reserve(usable.size());
    for (std::size_t k : usable) masked.push_back(mask_last(seq, partition[k]));

    // One task per grid cell; its folds run in order, each warm-started from
    // the previous fold's solution.
    const std::vector<CvCell> cells = parallel_map(grid.size(), jobs, [&](std::size_t cell) {
        const Penalties p = method_penalties(method, grid[cell]);
        SolverConfig c = cfg;
        double sum = 0.0;
        for (std::size_t f = 0; f < usable.size(); ++f) {
            Matrix scores;
            if (is_static(method)) {
                FitResult fit = static_fit_result(masked[f], p, c);
                scores = fit.a_hat;
                c.warm_start.emplace(std::move(fit.a_hat), std::move(fit.w_hat));
            } else if (is_autoregressive(method)) {
                FitResult fit = autoregressive_fit(masked[f], feature_rank, p, c);
                scores = fit.a_hat;
                c.warm_start.emplace(std::move(fit.a_hat), std::move(fit.w_hat));
            } else {
                scores = score_method(method, masked[f], p, c, feature_rank).scores;
            }
            sum += auc(scores, truth, threshold, partition[usable[f]]);
        }
        return CvCell{grid[cell], sum / static_cast<double>(usable.size()), static_cast<int>(usable.size())};
    });
    out.table = cells;

    std::size_t best = 0;
    for (std::size_t cell = 1; cell < out.table.size(); ++cell) {
        const CvCell& c = out.table[cell];
        const CvCell& b = out.table[best];
        if (c.mean_auc > b.mean_auc ||
            (c.mean_auc == b.mean_auc && c.penalties.total() < b.penalties.total())) {
            best = cell;
        }
    }
    out.best_index = best;
    out.best = out.table[best].penalties;
    return out;
}

inline CsvTable cv_table_csv(const CvResult& cv, std::string_view method) {
    CsvTable t({"schema_version", "method", "cell", "tau", "gamma", "kappa", "mean_auc", "folds_used", "selected"});
    for (std::size_t i = 0; i < cv.table.size(); ++i) {
        const CvCell& c = cv.table[i];
        t.add_row({"1", std::string(method), std::to_string(i), format_double(c.penalties.tau),
                   format_double(c.penalties.gamma), format_double(c.penalties.kappa),
                   format_double(c.mean_auc), std::to_string(c.folds_used), i == cv.best_index ? "1" : "0"});
    }
    return t;
}

// ---------------------------------------------------------------------------
// Concentration diagnostics

struct ConcentrationRecord {
    std::string name;
    double bound = 0.0;
    int trials = 0;
    int violations = 0;
    double rate = 0.0;
    double cap = 0.0;     // theoretical violation probability, clipped at 1
    double margin = 0.0;  // 3 sqrt(cap / trials)

    bool within_cap() const noexcept { return rate <= cap + margin; }
};

struct ConcentrationReport {
    std::vector<ConcentrationRecord> records;
};

/// Simulates i.i.d. N(0, sigma^2) feature noise and counts how often each of
///   (a) |(1/d) sum_j N_j Omega_j|_op,
///   (b) |(1/d) sum_j N_j Omega_j|_inf,
///   (c) |(1/(T+1)) sum_t F(A_{t-1}) N_t^T|_inf
/// exceeds its bound; caps are e^-x, 2 e^-x and 14 e^-x.
inline ConcentrationReport concentration_check(const FeatureMap& map, const GraphSequence& seq, double sigma,
                                               double x, int trials, std::uint64_t seed) {
    if (trials < 1) throw DomainError("concentration_check: trials must be >= 1");
    if (!(sigma >= 0.0)) throw DomainError("concentration_check: sigma must be >= 0");
    if (!(x > 0.0)) throw DomainError("concentration_check: x must be > 0");
    const VarianceTerms v = variance_terms(map);
    const SequenceVariance sv = sequence_variance(map, seq);
    const double n = static_cast<double>(map.n());
    const double d = static_cast<double>(map.d_eff());
    const Index steps = static_cast<Index>(seq.size());  // T + 1
    const double t1 = static_cast<double>(steps);

    const double bound_a = sigma * v.v_op * std::sqrt(2.0 * (x + std::log(2.0 * n)) / d);
    const double bound_b = sigma * v.v_inf * std::sqrt(2.0 * (x + 2.0 * std::log(n)) / d);
    const double bound_c =
        sigma * sv.sigma_omega * std::sqrt(2.0 * std::numbers::e * (x + 2.0 * std::log(d) + sv.ell_t) / t1);

    // Rows: flattened features F(A_0)..F(A_T).
    const Index dim = map.d_eff();
    Matrix feats(steps, dim);
    for (Index t = 0; t < steps; ++t) {
        const Matrix f = map.apply(seq[static_cast<std::size_t>(t)]);
        feats.row(t) = Eigen::Map<const Eigen::RowVectorXd>(f.data(), dim);
    }

    Rng rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int viol_a = 0, viol_b = 0, viol_c = 0;
    Matrix noise(steps, dim);
    for (int trial = 0; trial < trials; ++trial) {
        for (Index k = 0; k < noise.size(); ++k) noise(k) = sigma * gauss(rng);
        const Eigen::RowVectorXd last_row = noise.row(steps - 1);
        const Matrix last = Eigen::Map<const Matrix>(last_row.data(), map.feature_rows(), map.feature_cols());
        const Matrix m = map.adjoint(last) / d;
        if (operator_norm(m) > bound_a) ++viol_a;
        if (max_abs(m) > bound_b) ++viol_b;
        const Matrix xi = feats.transpose() * noise / t1;
        if (max_abs(xi) > bound_c) ++viol_c;
    }

    auto record = [&](std::string name, double bound, int viol, double cap_mult) {
        ConcentrationRecord r;
        r.name = std::move(name);
        r.bound = bound;
        r.trials = trials;
        r.violations = viol;
        r.rate = static_cast<double>(viol) / trials;
        r.cap = std::min(1.0, cap_mult * std::exp(-x));
        r.margin = 3.0 * std::sqrt(r.cap / trials);
        return r;
    };
    ConcentrationReport rep;
    rep.records.push_back(record("operator_norm", bound_a, viol_a, 1.0));
    rep.records.push_back(record("entrywise_max", bound_b, viol_b, 2.0));
    rep.records.push_back(record("martingale_max", bound_c, viol_c, 14.0));
    return rep;
}

inline CsvTable concentration_csv(const ConcentrationReport& rep) {
    CsvTable t({"schema_version", "inequality", "bound", "trials", "violations", "rate", "cap", "margin", "within_cap"});
    for (const auto& r : rep.records) {
        t.add_row({"1", r.name, format_double(r.bound), std::to_string(r.trials), std::to_string(r.violations),
                   format_double(r.rate), format_double(r.cap), format_double(r.margin),
                   r.within_cap() ? "1" : "0"});
    }
    return t;
}

}  // namespace arlink
