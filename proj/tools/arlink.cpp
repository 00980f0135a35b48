// Command-line front end: generate, fit, predict, tune, evaluate, sweep, diagnose.
// Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

#include "arlink.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace arlink;

namespace {

struct GlobalOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
    std::vector<std::string> overrides;
    bool verbose = false;
};

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void info(const GlobalOptions& g, const std::string& msg) {
    if (g.verbose) std::cerr << msg << '\n';
}

// Without --config the experiment starts from the default synthetic setting (n=50, r=5, T=10).
nlohmann::json base_document(const GlobalOptions& g) {
    if (!g.config.empty()) return parse_json_text(read_text(g.config), g.config);
    return nlohmann::json{{"n", 50}, {"r", 5}, {"T", 10}, {"sigma", 0.5}};
}

ExperimentSpec load_spec(const GlobalOptions& g) {
    nlohmann::json doc = base_document(g);
    for (const auto& o : g.overrides) apply_override(doc, o);
    ExperimentSpec spec = experiment_from_json(doc);
    if (g.seed) {
        spec.seed = *g.seed;
        spec.generator.seed = *g.seed;
    }
    return spec;
}

fs::path require_out(const GlobalOptions& g, const char* cmd) {
    if (g.out.empty()) throw UsageError(std::string(cmd) + ": --out is required");
    return g.out;
}

Method parse_method_or_throw(const std::string& name) {
    const auto m = parse_method(name);
    if (!m) throw UsageError("unknown method '" + name + "'");
    return *m;
}

void require_svd_features(const ExperimentSpec& spec, const char* cmd) {
    if (spec.features.kind != "svd") {
        throw ConfigError("feature_map.kind", std::string(cmd) + " supports only the \"svd\" feature map");
    }
}

FeatureMap feature_map_for(const ExperimentSpec& spec, const GraphSequence& seq) {
    if (spec.features.kind == "dir") return load_feature_map(spec.features.path);
    return svd_feature_map(cumulative(seq), spec.feature_rank());
}

nlohmann::ordered_json penalties_json(const Penalties& p) {
    return {{"tau", p.tau}, {"gamma", p.gamma}, {"kappa", p.kappa}, {"alpha", p.alpha}};
}

void emit(const GlobalOptions& g, const fs::path& file, const std::string& text) {
    if (g.out.empty()) {
        std::cout << text;
    } else {
        fs::create_directories(g.out);
        write_text(fs::path(g.out) / file, text);
    }
}

Penalties tune_for(const GlobalOptions& g, const ExperimentSpec& spec, Method method, const GraphSequence& seq,
                   CvResult* cv) {
    if (spec.features.kind == "dir" && is_autoregressive(method)) {
        if (spec.tuning.policy == TuningPolicy::Fixed) return method_penalties(method, spec.penalties);
        if (spec.tuning.policy != TuningPolicy::Theorem3) {
            throw ConfigError("tuning.policy", "cross-validation needs the \"svd\" feature map");
        }
        const FeatureMap map = load_feature_map(spec.features.path);
        const double sigma = spec.tuning.sigma ? *spec.tuning.sigma : estimate_sigma(ProblemData(map, seq));
        return method_penalties(method, theorem3_params(map, seq, sigma, spec.tuning.alpha, spec.tuning.x));
    }
    info(g, std::string("tuning ") + std::string(method_name(method)) + " (" + to_string(spec.tuning.policy) + ")");
    return tune_penalties(method, seq, spec, spec.seed, cv);
}

int cmd_generate(const GlobalOptions& g) {
    const fs::path out = require_out(g, "generate");
    const ExperimentSpec spec = load_spec(g);
    const SyntheticDataset ds = generate(spec.generator);
    save_dataset(ds, out);
    info(g, "wrote " + std::to_string(ds.sequence.size()) + " snapshots to " + out.string() +
                " (clamped fraction " + format_double(ds.clamped_fraction) + ")");
    return 0;
}

int cmd_fit(const GlobalOptions& g, const std::string& data, const std::string& method_name_arg) {
    const fs::path out = require_out(g, "fit");
    const ExperimentSpec spec = load_spec(g);
    const Method method = parse_method_or_throw(method_name_arg);
    if (!has_penalties(method)) throw UsageError("fit: method 'nn' has no parameters to fit");
    const GraphSequence seq = load_sequence(data);
    const Penalties pen = tune_for(g, spec, method, seq, nullptr);

    fs::create_directories(out);
    FitResult fit;
    if (is_static(method)) {
        fit = static_fit_result(seq, pen, spec.solver);
    } else {
        const FeatureMap map = feature_map_for(spec, seq);
        save_feature_map(map, out / "feature_map");
        fit = gfb_minimize(ProblemData(map, seq), pen, spec.solver);
    }
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << '\n';
    write_matrix(fit.a_hat, out / "A_hat.mtx");
    if (fit.w_hat.size() > 0) write_matrix(fit.w_hat, out / "W_hat.mtx");

    nlohmann::ordered_json j;
    j["method"] = std::string(method_name(method));
    j["penalties"] = penalties_json(pen);
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["objective"] = fit.objective.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(fit.objective.back());
    j["residual"] = fit.residual;
    j["step"] = fit.step;
    j["w_step"] = fit.w_step;
    j["lipschitz"] = fit.lipschitz;
    j["include_diagonal"] = spec.include_diagonal;
    j["warnings"] = fit.warnings;
    write_text(out / "fit.json", j.dump(2) + "\n");
    info(g, "fit " + std::string(method_name(method)) + ": " + std::to_string(fit.iterations) + " iterations, " +
                (fit.converged ? "converged" : "not converged") + ", residual " + format_double(fit.residual));
    return 0;
}

int cmd_predict(const GlobalOptions& g, const std::string& fit_dir) {
    const fs::path dir(fit_dir);
    const nlohmann::json meta = parse_json_text(read_text(dir / "fit.json"), (dir / "fit.json").string());
    ScoreMatrix scores{read_matrix(dir / "A_hat.mtx"), meta.value("include_diagonal", false)};
    if (g.out.empty()) {
        std::cout << format_matrix_market(scores.scores);
    } else {
        const fs::path out(g.out);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        write_matrix(scores.scores, out);
    }
    return 0;
}

int cmd_tune(const GlobalOptions& g, const std::string& data, const std::string& method_name_arg) {
    const ExperimentSpec spec = load_spec(g);
    const Method method = parse_method_or_throw(method_name_arg);
    const GraphSequence seq = load_sequence(data);
    CvResult cv;
    const Penalties pen = tune_for(g, spec, method, seq, &cv);
    nlohmann::ordered_json j = penalties_json(pen);
    j["method"] = std::string(method_name(method));
    j["policy"] = to_string(spec.tuning.policy);
    emit(g, "penalties.json", j.dump(2) + "\n");
    if (!cv.table.empty()) {
        for (const auto& w : cv.warnings) std::cerr << "warning: " << w << '\n';
        if (!g.out.empty()) write_text(fs::path(g.out) / spec.output.cv_csv, cv_table_csv(cv, method_name(method)).str());
    }
    return 0;
}

void report_failures(const std::vector<RunResult>& results) {
    for (const auto& r : results) {
        if (!r.auc) {
            std::cerr << "run " << r.run << " (seed " << r.seed << ") " << method_name(r.method)
                      << " failed: " << r.error << '\n';
        }
    }
}

int cmd_evaluate(const GlobalOptions& g) {
    const fs::path out = require_out(g, "evaluate");
    const ExperimentSpec spec = load_spec(g);
    require_svd_features(spec, "evaluate");
    info(g, "evaluate: " + std::to_string(spec.runs) + " runs, " + std::to_string(spec.methods.size()) + " methods");
    const auto results = run_experiment(spec, g.jobs);
    report_failures(results);
    fs::create_directories(out);
    results_csv(results).save(out / spec.output.results_csv);
    summary_csv(summarize(results)).save(out / spec.output.summary_csv);
    if (!spec.output.timings_csv.empty()) timings_csv(results).save(out / spec.output.timings_csv);
    if (g.verbose) {
        for (const auto& row : summarize(results)) {
            std::cerr << method_name(row.method) << ": mean AUC " << format_double(row.mean_auc) << " +- "
                      << format_double(row.ci_halfwidth) << '\n';
        }
    }
    return 0;
}

int cmd_sweep(const GlobalOptions& g) {
    const fs::path out = require_out(g, "sweep");
    const ExperimentSpec spec = load_spec(g);
    require_svd_features(spec, "sweep");
    if (spec.sweep_t.empty() && spec.sweep_rank.empty()) {
        throw ConfigError("sweep", "set sweep.T_values and/or sweep.rank_values");
    }
    const auto results = sweep_phase(spec, g.jobs);
    report_failures(results);
    fs::create_directories(out);
    results_csv(results).save(out / spec.output.results_csv);
    summary_csv(summarize(results)).save(out / spec.output.sweep_csv);
    if (!spec.output.timings_csv.empty()) timings_csv(results).save(out / spec.output.timings_csv);
    return 0;
}

int cmd_diagnose(const GlobalOptions& g, const std::string& data) {
    const ExperimentSpec spec = load_spec(g);
    GraphSequence seq = data.empty() ? generate(spec.generator).sequence : load_sequence(data);
    const FeatureMap map = feature_map_for(spec, seq);
    const ConcentrationReport rep = concentration_check(map, seq, spec.generator.sigma, spec.diagnose_x,
                                                        spec.diagnose_trials,
                                                        substream(spec.seed, tags::kConcentration));
    emit(g, spec.output.concentration_csv, concentration_csv(rep).str());
    for (const auto& r : rep.records) {
        info(g, r.name + ": rate " + format_double(r.rate) + " cap " + format_double(r.cap) +
                    (r.within_cap() ? "" : " (above cap)"));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Link prediction in graph sequences with autoregressive features"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config, "Experiment configuration (JSON)");
    app.add_option("--out", g.out, "Output directory (or file for predict)");
    app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s; }, "Master seed");
    app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--override", g.overrides, "Set a config field, e.g. --override tuning.folds=5")
        ->allow_extra_args(false);
    app.add_flag("--verbose,-v", g.verbose, "Progress on standard error");

    std::string data, method = "autoregressive-sparse-low-rank", fit_dir;

    auto* gen = app.add_subcommand("generate", "Write a synthetic dataset directory");
    auto* fit = app.add_subcommand("fit", "Fit one method on a dataset directory");
    fit->add_option("--data", data, "Dataset directory")->required();
    fit->add_option("--method", method, "Method name");
    auto* predict = app.add_subcommand("predict", "Score matrix from a fit directory");
    predict->add_option("--fit", fit_dir, "Fit directory")->required();
    auto* tune = app.add_subcommand("tune", "Select penalties for one method");
    tune->add_option("--data", data, "Dataset directory")->required();
    tune->add_option("--method", method, "Method name");
    auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo AUC benchmark");
    auto* sweep = app.add_subcommand("sweep", "AUC over a (T, rank) grid");
    auto* diagnose = app.add_subcommand("diagnose", "Monte Carlo check of the noise concentration bounds");
    diagnose->add_option("--data", data, "Dataset directory (default: generate from the config)");
    for (auto* sub : {gen, fit, predict, tune, evaluate, sweep, diagnose}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*gen) return cmd_generate(g);
        if (*fit) return cmd_fit(g, data, method);
        if (*predict) return cmd_predict(g, fit_dir);
        if (*tune) return cmd_tune(g, data, method);
        if (*evaluate) return cmd_evaluate(g);
        if (*sweep) return cmd_sweep(g);
        if (*diagnose) return cmd_diagnose(g, data);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
