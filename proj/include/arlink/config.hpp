#pragma once
// Experiment configuration: strict JSON parsing (unknown keys are errors),
// dotted-key overrides, and the one place where defaults live.

#include "arlink/baselines.hpp"
#include "arlink/generator.hpp"
#include "arlink/matio.hpp"
#include "arlink/objective.hpp"
#include "arlink/solver.hpp"
#include "arlink/types.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace arlink {

namespace defaults {
inline constexpr double kAlpha = 0.5;
inline constexpr int kMaxIter = 10000;
inline constexpr double kTol = 1e-6;
inline constexpr double kStepFactor = 1.9;
inline constexpr bool kEnforceNonneg = true;
inline constexpr int kRuns = 50;
inline constexpr int kFolds = 10;
inline constexpr double kConfidenceX = 3.0;
inline constexpr double kBinarizeThreshold = 1e-6;
inline constexpr double kDensity = 0.3;
inline constexpr double kWNorm = 0.9;
inline constexpr int kDiagnoseTrials = 1000;
// Relative grids: fractions of each term's zeroing weight (see penalty_scales).
inline const std::vector<double> kGridTau{0.05, 0.2, 0.5};
inline const std::vector<double> kGridGamma{0.05, 0.2, 0.5};
inline const std::vector<double> kGridKappa{0.01, 0.1};
}  // namespace defaults

enum class TuningPolicy { Fixed, Theorem3, CrossValidation };

inline const char* to_string(TuningPolicy p) {
    switch (p) {
        case TuningPolicy::Fixed: return "fixed";
        case TuningPolicy::Theorem3: return "theorem3";
        case TuningPolicy::CrossValidation: return "cv";
    }
    return "?";
}

struct TuningSpec {
    TuningPolicy policy = TuningPolicy::CrossValidation;
    int folds = defaults::kFolds;
    double x = defaults::kConfidenceX;
    double alpha = defaults::kAlpha;
    std::optional<double> sigma;  // noise level for the closed-form rule; estimated when absent
    bool relative_grid = true;
    std::vector<double> grid_tau = defaults::kGridTau;
    std::vector<double> grid_gamma = defaults::kGridGamma;
    std::vector<double> grid_kappa = defaults::kGridKappa;
};

struct FeatureSpec {
    std::string kind = "svd";  // "svd": top singular vectors of the cumulative graph; "dir": saved map
    Index rank = 0;            // 0: use the generator rank
    std::filesystem::path path;
};

struct OutputSpec {
    std::string results_csv = "results.csv";
    std::string summary_csv = "summary.csv";
    std::string sweep_csv = "sweep.csv";
    std::string cv_csv = "cv.csv";
    std::string concentration_csv = "concentration.csv";
    std::string timings_csv;  // wall-clock times; not reproducible, off by default
};

struct ExperimentSpec {
    GeneratorParams generator;
    FeatureSpec features;
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
    TuningSpec tuning;
    Penalties penalties;
    SolverConfig solver;
    int runs = defaults::kRuns;
    std::uint64_t seed = 0;
    double binarize_threshold = defaults::kBinarizeThreshold;
    bool include_diagonal = false;
    std::vector<Index> sweep_t;
    std::vector<Index> sweep_rank;
    double diagnose_x = defaults::kConfidenceX;
    int diagnose_trials = defaults::kDiagnoseTrials;
    OutputSpec output;

    Index feature_rank() const { return features.rank > 0 ? features.rank : generator.r; }
};

namespace detail {

using json = nlohmann::json;

inline std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(path.empty() ? "(root)" : path, "expected a JSON object");
    for (const auto& [key, _] : obj.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!ok) throw ConfigError(join_path(path, key), "unknown key");
    }
}

template <class T>
T get_as(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    const json& v = obj.at(key);
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(join_path(path, key), "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(join_path(path, key), "expected an integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(join_path(path, key), "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(join_path(path, key), "expected a string");
        }
        return v.get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(join_path(path, key), e.what());
    }
}

template <class T>
std::vector<T> get_list(const json& obj, const std::string& key, const std::string& path, std::vector<T> fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    const json& v = obj.at(key);
    const std::string p = join_path(path, key);
    if (!v.is_array()) throw ConfigError(p, "expected an array");
    std::vector<T> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const bool ok = std::is_integral_v<T> ? v[i].is_number_integer() : v[i].is_number();
        if (!ok) throw ConfigError(p + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<T>());
    }
    return out;
}

inline void require(bool cond, const std::string& field, const std::string& what) {
    if (!cond) throw ConfigError(field, what);
}

}  // namespace detail

/// Validates a parsed JSON document and fills defaults.
inline ExperimentSpec experiment_from_json(const nlohmann::json& root) {
    using detail::check_keys;
    using detail::get_as;
    using detail::get_list;
    using detail::require;
    check_keys(root, "", {"n", "r", "T", "sigma", "noise_threshold", "density", "w_norm", "factor_range",
                          "clamp_nonneg", "feature_map", "methods", "tuning", "penalties", "solver", "runs",
                          "seed", "binarize_threshold", "include_diagonal", "sweep", "diagnose", "output"});
    for (const char* key : {"n", "r", "T", "sigma"}) {
        require(root.contains(key), key, "required field is missing");
    }

    ExperimentSpec s;
    GeneratorParams& g = s.generator;
    g.n = get_as<Index>(root, "n", "", 0);
    g.r = get_as<Index>(root, "r", "", 0);
    g.horizon = get_as<Index>(root, "T", "", 0);
    g.sigma = get_as<double>(root, "sigma", "", 0.0);
    require(g.n >= 2, "n", "must be >= 2");
    require(g.r >= 1, "r", "must be >= 1");
    require(g.r <= g.n, "r", "must be <= n");
    require(g.horizon >= 1, "T", "must be >= 1");
    require(g.sigma >= 0.0, "sigma", "must be >= 0");
    if (root.contains("noise_threshold") && !root["noise_threshold"].is_null()) {
        g.noise_threshold = get_as<double>(root, "noise_threshold", "", 0.0);
        require(*g.noise_threshold >= 0.0, "noise_threshold", "must be >= 0");
    }
    if (root.contains("density")) {
        const auto& d = root["density"];
        check_keys(d, "density", {"v", "u", "w"});
        g.density_v = get_as<double>(d, "v", "density", defaults::kDensity);
        g.density_u = get_as<double>(d, "u", "density", defaults::kDensity);
        g.density_w = get_as<double>(d, "w", "density", defaults::kDensity);
        for (auto [k, v] : {std::pair{"v", g.density_v}, {"u", g.density_u}, {"w", g.density_w}}) {
            require(v > 0.0 && v <= 1.0, std::string("density.") + k, "must lie in (0, 1]");
        }
    }
    g.w_norm = get_as<double>(root, "w_norm", "", defaults::kWNorm);
    require(g.w_norm > 0.0, "w_norm", "must be > 0");
    const std::string range = get_as<std::string>(root, "factor_range", "", "unit");
    require(range == "unit" || range == "symmetric", "factor_range", "must be \"unit\" or \"symmetric\"");
    g.factor_range = range == "unit" ? FactorRange::Unit : FactorRange::Symmetric;
    g.clamp_nonneg = get_as<bool>(root, "clamp_nonneg", "", true);

    if (root.contains("feature_map")) {
        const auto& f = root["feature_map"];
        check_keys(f, "feature_map", {"kind", "rank", "path"});
        s.features.kind = get_as<std::string>(f, "kind", "feature_map", "svd");
        require(s.features.kind == "svd" || s.features.kind == "dir", "feature_map.kind",
                "must be \"svd\" or \"dir\"");
        s.features.rank = get_as<Index>(f, "rank", "feature_map", 0);
        require(s.features.rank >= 0 && s.features.rank <= g.n, "feature_map.rank", "must lie in [1, n]");
        s.features.path = get_as<std::string>(f, "path", "feature_map", "");
        require(s.features.kind != "dir" || !s.features.path.empty(), "feature_map.path",
                "required when kind is \"dir\"");
    }

    if (root.contains("methods")) {
        const auto& m = root["methods"];
        require(m.is_array() && !m.empty(), "methods", "expected a nonempty array of method names");
        s.methods.clear();
        for (std::size_t i = 0; i < m.size(); ++i) {
            const std::string field = "methods[" + std::to_string(i) + "]";
            require(m[i].is_string(), field, "expected a string");
            const auto parsed = parse_method(m[i].get<std::string>());
            require(parsed.has_value(), field, "unknown method '" + m[i].get<std::string>() + "'");
            s.methods.push_back(*parsed);
        }
    }

    const bool has_penalties = root.contains("penalties");
    if (has_penalties) {
        const auto& p = root["penalties"];
        check_keys(p, "penalties", {"tau", "gamma", "kappa", "alpha"});
        s.penalties.tau = get_as<double>(p, "tau", "penalties", 0.0);
        s.penalties.gamma = get_as<double>(p, "gamma", "penalties", 0.0);
        s.penalties.kappa = get_as<double>(p, "kappa", "penalties", 0.0);
        s.penalties.alpha = get_as<double>(p, "alpha", "penalties", defaults::kAlpha);
        for (auto [k, v] : {std::pair{"tau", s.penalties.tau}, {"gamma", s.penalties.gamma},
                            {"kappa", s.penalties.kappa}}) {
            require(v >= 0.0, std::string("penalties.") + k, "must be >= 0");
        }
        require(s.penalties.alpha > 0.0 && s.penalties.alpha < 1.0, "penalties.alpha", "must lie in (0, 1)");
    }

    s.tuning.policy = has_penalties ? TuningPolicy::Fixed : TuningPolicy::CrossValidation;
    if (root.contains("tuning")) {
        const auto& t = root["tuning"];
        check_keys(t, "tuning", {"policy", "folds", "x", "alpha", "sigma", "grid", "relative_grid"});
        if (t.contains("policy")) {
            const std::string pol = get_as<std::string>(t, "policy", "tuning", "");
            if (pol == "fixed") s.tuning.policy = TuningPolicy::Fixed;
            else if (pol == "theorem3") s.tuning.policy = TuningPolicy::Theorem3;
            else if (pol == "cv") s.tuning.policy = TuningPolicy::CrossValidation;
            else throw ConfigError("tuning.policy", "must be \"fixed\", \"theorem3\" or \"cv\"");
        }
        s.tuning.folds = get_as<int>(t, "folds", "tuning", defaults::kFolds);
        require(s.tuning.folds >= 2, "tuning.folds", "must be >= 2");
        s.tuning.x = get_as<double>(t, "x", "tuning", defaults::kConfidenceX);
        require(s.tuning.x > 0.0, "tuning.x", "must be > 0");
        s.tuning.alpha = get_as<double>(t, "alpha", "tuning", s.penalties.alpha);
        require(s.tuning.alpha > 0.0 && s.tuning.alpha < 1.0, "tuning.alpha", "must lie in (0, 1)");
        if (t.contains("sigma") && !t["sigma"].is_null()) {
            s.tuning.sigma = get_as<double>(t, "sigma", "tuning", 0.0);
            require(*s.tuning.sigma > 0.0, "tuning.sigma", "must be > 0");
        }
        s.tuning.relative_grid = get_as<bool>(t, "relative_grid", "tuning", true);
        if (t.contains("grid")) {
            const auto& gr = t["grid"];
            check_keys(gr, "tuning.grid", {"tau", "gamma", "kappa"});
            s.tuning.grid_tau = get_list<double>(gr, "tau", "tuning.grid", defaults::kGridTau);
            s.tuning.grid_gamma = get_list<double>(gr, "gamma", "tuning.grid", defaults::kGridGamma);
            s.tuning.grid_kappa = get_list<double>(gr, "kappa", "tuning.grid", defaults::kGridKappa);
            for (const auto* list : {&s.tuning.grid_tau, &s.tuning.grid_gamma, &s.tuning.grid_kappa}) {
                require(!list->empty(), "tuning.grid", "grid axes must be nonempty");
                for (double v : *list) require(v >= 0.0, "tuning.grid", "grid values must be >= 0");
            }
        }
    }

    if (root.contains("solver")) {
        const auto& so = root["solver"];
        check_keys(so, "solver", {"max_iter", "tol", "step", "step_factor", "precondition", "enforce_nonneg", "record_objective",
                                  "trace_csv"});
        s.solver.max_iter = get_as<int>(so, "max_iter", "solver", defaults::kMaxIter);
        require(s.solver.max_iter >= 1, "solver.max_iter", "must be >= 1");
        s.solver.tol = get_as<double>(so, "tol", "solver", defaults::kTol);
        require(s.solver.tol > 0.0, "solver.tol", "must be > 0");
        s.solver.step = get_as<double>(so, "step", "solver", 0.0);
        require(s.solver.step >= 0.0, "solver.step", "must be > 0 (or 0 for automatic)");
        s.solver.step_factor = get_as<double>(so, "step_factor", "solver", defaults::kStepFactor);
        require(s.solver.step_factor > 0.0, "solver.step_factor", "must be > 0");
        s.solver.precondition = get_as<bool>(so, "precondition", "solver", false);
        s.solver.enforce_nonneg = get_as<bool>(so, "enforce_nonneg", "solver", defaults::kEnforceNonneg);
        s.solver.record_objective = get_as<bool>(so, "record_objective", "solver", true);
        s.solver.trace_csv = get_as<std::string>(so, "trace_csv", "solver", "");
    }

    s.runs = get_as<int>(root, "runs", "", defaults::kRuns);
    require(s.runs >= 1, "runs", "must be >= 1");
    s.seed = get_as<std::uint64_t>(root, "seed", "", 0);
    s.binarize_threshold = get_as<double>(root, "binarize_threshold", "", defaults::kBinarizeThreshold);
    require(s.binarize_threshold >= 0.0, "binarize_threshold", "must be >= 0");
    s.include_diagonal = get_as<bool>(root, "include_diagonal", "", false);

    if (root.contains("sweep")) {
        const auto& sw = root["sweep"];
        check_keys(sw, "sweep", {"T_values", "rank_values"});
        s.sweep_t = get_list<Index>(sw, "T_values", "sweep", {});
        s.sweep_rank = get_list<Index>(sw, "rank_values", "sweep", {});
        for (Index t : s.sweep_t) require(t >= 1, "sweep.T_values", "values must be >= 1");
        for (Index r : s.sweep_rank) require(r >= 1 && r <= g.n, "sweep.rank_values", "values must lie in [1, n]");
    }

    if (root.contains("diagnose")) {
        const auto& dg = root["diagnose"];
        check_keys(dg, "diagnose", {"x", "trials"});
        s.diagnose_x = get_as<double>(dg, "x", "diagnose", defaults::kConfidenceX);
        require(s.diagnose_x > 0.0, "diagnose.x", "must be > 0");
        s.diagnose_trials = get_as<int>(dg, "trials", "diagnose", defaults::kDiagnoseTrials);
        require(s.diagnose_trials >= 1, "diagnose.trials", "must be >= 1");
    }

    if (root.contains("output")) {
        const auto& o = root["output"];
        check_keys(o, "output", {"results_csv", "summary_csv", "sweep_csv", "cv_csv", "concentration_csv",
                                 "timings_csv"});
        s.output.results_csv = get_as<std::string>(o, "results_csv", "output", s.output.results_csv);
        s.output.summary_csv = get_as<std::string>(o, "summary_csv", "output", s.output.summary_csv);
        s.output.sweep_csv = get_as<std::string>(o, "sweep_csv", "output", s.output.sweep_csv);
        s.output.cv_csv = get_as<std::string>(o, "cv_csv", "output", s.output.cv_csv);
        s.output.concentration_csv = get_as<std::string>(o, "concentration_csv", "output", s.output.concentration_csv);
        s.output.timings_csv = get_as<std::string>(o, "timings_csv", "output", "");
    }

    g.seed = s.seed;
    return s;
}

/// Sets `dotted.key=value` in the raw document. The value is read as JSON when
/// it parses (numbers, booleans, arrays, quoted strings) and as a bare string
/// otherwise. Validation happens afterwards, so bad overrides fail there.
inline void apply_override(nlohmann::json& root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError(assignment, "override must have the form key.path=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;
    }
    nlohmann::json* node = &root;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError(key, "empty path component in override");
        if (!node->is_object()) throw ConfigError(key, "override traverses a non-object value");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = nlohmann::json::object();
        start = dot + 1;
    }
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", origin + ": invalid JSON: " + e.what());
    }
}

inline ExperimentSpec parse_experiment_config(const std::filesystem::path& path,
                                              const std::vector<std::string>& overrides = {}) {
    nlohmann::json root = parse_json_text(read_text(path), path.string());
    for (const auto& o : overrides) apply_override(root, o);
    return experiment_from_json(root);
}

}  // namespace arlink
