#pragma once
// Monte Carlo AUC benchmark: repeated synthetic runs, per-run tuning and
// scoring of every requested method, and the (T, rank) phase sweep.

#include "arlink/auc.hpp"
#include "arlink/baselines.hpp"
#include "arlink/config.hpp"
#include "arlink/features.hpp"
#include "arlink/generator.hpp"
#include "arlink/matio.hpp"
#include "arlink/parallel.hpp"
#include "arlink/rng.hpp"
#include "arlink/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace arlink {

inline constexpr const char* kSchemaVersion = "1";

struct RunResult {
    Method method = Method::NearestNeighbors;
    int run = 0;
    std::uint64_t seed = 0;
    Index horizon = 0;
    Index rank = 0;
    Penalties penalties;
    std::optional<double> auc;  // empty when the run failed
    std::string error;
    double wall_seconds = 0.0;  // kept out of the results CSV
};

/// Penalties for one method on one observed sequence under the experiment's tuning policy.
/// The closed-form rule only covers the autoregressive estimator; static
/// methods fall back to cross-validation under that policy.
inline Penalties tune_penalties(Method method, const GraphSequence& seq, const ExperimentSpec& spec,
                                std::uint64_t run_seed, CvResult* cv_out = nullptr) {
    if (!has_penalties(method)) return method_penalties(method, Penalties{});
    const Index rank = spec.feature_rank();
    const TuningSpec& t = spec.tuning;
    if (t.policy == TuningPolicy::Fixed) return method_penalties(method, spec.penalties);
    if (t.policy == TuningPolicy::Theorem3 && is_autoregressive(method)) {
        const FeatureMap map = svd_feature_map(cumulative(seq), rank);
        const double sigma = t.sigma ? *t.sigma : estimate_sigma(ProblemData(map, seq));
        if (!(sigma > 0.0)) throw NumericalError("estimated noise level is zero; set tuning.sigma");
        return method_penalties(method, theorem3_params(map, seq, sigma, t.alpha, t.x));
    }
    const Penalties scale = t.relative_grid ? penalty_scales(method, seq, rank) : Penalties{1.0, 1.0, 1.0, t.alpha};
    std::vector<Penalties> grid;
    for (double tau : t.grid_tau) {
        for (double gamma : t.grid_gamma) {
            for (double kappa : t.grid_kappa) {
                Penalties p{tau * scale.tau, gamma * scale.gamma, kappa * scale.kappa, t.alpha};
                p = method_penalties(method, p);
                const bool dup = std::any_of(grid.begin(), grid.end(), [&](const Penalties& q) { return q == p; });
                if (!dup) grid.push_back(p);
            }
        }
    }
    CvResult cv = cross_validate(method, seq, grid, t.folds, substream(run_seed, tags::kFolds), spec.solver, rank,
                                 spec.binarize_threshold, 1);
    const Penalties best = cv.best;
    if (cv_out) *cv_out = std::move(cv);
    return best;
}

/// One Monte Carlo replicate: every method on the dataset drawn from the
/// run's seed stream.
inline std::vector<RunResult> run_single(const ExperimentSpec& spec, int run) {
    const std::uint64_t run_seed = stream_seed(spec.seed, static_cast<std::uint64_t>(run));
    GeneratorParams gp = spec.generator;
    gp.seed = substream(run_seed, tags::kGenerate);
    std::vector<RunResult> out;
    std::optional<SyntheticDataset> ds;
    std::string gen_error;
    try {
        ds = generate(gp);
    } catch (const std::exception& e) {
        gen_error = std::string("generate: ") + e.what();
    }
    for (Method m : spec.methods) {
        RunResult r;
        r.method = m;
        r.run = run;
        r.seed = run_seed;
        r.horizon = gp.horizon;
        r.rank = spec.feature_rank();
        const auto start = std::chrono::steady_clock::now();
        if (!ds) {
            r.error = gen_error;
        } else {
            try {
                r.penalties = tune_penalties(m, ds->sequence, spec, run_seed);
                ScoreMatrix s = score_method(m, ds->sequence, r.penalties, spec.solver, r.rank);
                s.include_diagonal = spec.include_diagonal;
                r.auc = auc(s, ds->a_next, spec.binarize_threshold);
            } catch (const std::exception& e) {
                r.error = e.what();
            }
        }
        r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back(std::move(r));
    }
    return out;
}

/// All runs of one configuration, in (run, method) order regardless of `jobs`.
inline std::vector<RunResult> run_experiment(const ExperimentSpec& spec, int jobs = 1) {
    const auto per_run = parallel_map(static_cast<std::size_t>(spec.runs), jobs,
                                      [&](std::size_t i) { return run_single(spec, static_cast<int>(i)); });
    std::vector<RunResult> out;
    for (const auto& v : per_run) out.insert(out.end(), v.begin(), v.end());
    return out;
}

inline CsvTable results_csv(const std::vector<RunResult>& results) {
    CsvTable t({"schema_version", "method", "run", "seed", "T", "rank", "tau", "gamma", "kappa", "auc", "status",
                "error"});
    for (const auto& r : results) {
        t.add_row({kSchemaVersion, std::string(method_name(r.method)), std::to_string(r.run), std::to_string(r.seed),
                   std::to_string(r.horizon), std::to_string(r.rank), format_double(r.penalties.tau),
                   format_double(r.penalties.gamma), format_double(r.penalties.kappa),
                   r.auc ? format_double(*r.auc) : "", r.auc ? "ok" : "failed", r.error});
    }
    return t;
}

inline CsvTable timings_csv(const std::vector<RunResult>& results) {
    CsvTable t({"schema_version", "method", "run", "T", "rank", "wall_seconds"});
    for (const auto& r : results) {
        t.add_row({kSchemaVersion, std::string(method_name(r.method)), std::to_string(r.run),
                   std::to_string(r.horizon), std::to_string(r.rank), format_double(r.wall_seconds)});
    }
    return t;
}

struct SummaryRow {
    Method method = Method::NearestNeighbors;
    Index horizon = 0;
    Index rank = 0;
    double mean_auc = 0.0;
    double ci_halfwidth = 0.0;  // 1.96 sd / sqrt(runs)
    int n_runs = 0;
    int n_failed = 0;
};

/// Mean AUC per (method, T, rank) over successful runs; rows follow the
/// order in which the groups first appear.
inline std::vector<SummaryRow> summarize(const std::vector<RunResult>& results) {
    std::vector<SummaryRow> rows;
    std::vector<std::vector<double>> values;
    for (const auto& r : results) {
        std::size_t k = 0;
        while (k < rows.size() &&
               !(rows[k].method == r.method && rows[k].horizon == r.horizon && rows[k].rank == r.rank)) {
            ++k;
        }
        if (k == rows.size()) {
            rows.push_back({r.method, r.horizon, r.rank});
            values.emplace_back();
        }
        if (r.auc) values[k].push_back(*r.auc);
        else ++rows[k].n_failed;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& v = values[k];
        rows[k].n_runs = static_cast<int>(v.size());
        if (v.empty()) {
            rows[k].mean_auc = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        double sum = 0.0;
        for (double x : v) sum += x;
        const double mean = sum / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        rows[k].mean_auc = mean;
        if (v.size() > 1) {
            const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
            rows[k].ci_halfwidth = 1.96 * sd / std::sqrt(static_cast<double>(v.size()));
        }
    }
    return rows;
}

inline CsvTable summary_csv(const std::vector<SummaryRow>& rows) {
    CsvTable t({"schema_version", "method", "T", "rank", "mean_auc", "ci_halfwidth", "n_runs", "n_failed"});
    for (const auto& r : rows) {
        t.add_row({kSchemaVersion, std::string(method_name(r.method)), std::to_string(r.horizon),
                   std::to_string(r.rank), std::isnan(r.mean_auc) ? "" : format_double(r.mean_auc),
                   format_double(r.ci_halfwidth), std::to_string(r.n_runs), std::to_string(r.n_failed)});
    }
    return t;
}

/// Every (T, rank) cell of the sweep, runs of all cells sharing one worker
/// pool. Each cell uses the generator rank and the feature rank `rank`, and
/// the same master seed, so cells differ only in their parameters.
inline std::vector<RunResult> sweep_phase(const ExperimentSpec& spec, int jobs = 1) {
    const std::vector<Index> ts = spec.sweep_t.empty() ? std::vector<Index>{spec.generator.horizon} : spec.sweep_t;
    const std::vector<Index> ranks =
        spec.sweep_rank.empty() ? std::vector<Index>{spec.generator.r} : spec.sweep_rank;
    std::vector<ExperimentSpec> cells;
    for (Index t : ts) {
        for (Index rank : ranks) {
            ExperimentSpec c = spec;
            c.generator.horizon = t;
            c.generator.r = rank;
            c.features.rank = rank;
            c.generator.validate();
            cells.push_back(std::move(c));
        }
    }
    const std::size_t runs = static_cast<std::size_t>(spec.runs);
    const auto per_task = parallel_map(cells.size() * runs, jobs, [&](std::size_t task) {
        return run_single(cells[task / runs], static_cast<int>(task % runs));
    });
    std::vector<RunResult> out;
    for (const auto& v : per_task) out.insert(out.end(), v.begin(), v.end());
    return out;
}

}  // namespace arlink
