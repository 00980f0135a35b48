#pragma once
// Synthetic graph sequences whose linear features follow a VAR(1) model:
//
//     U_t = U_{t-1} W0 + N_t,     A_t = (U_t V0^T + M_t)_+
//
// with sparse factors V0, U0 (n x r), W0 (r x r) and soft-thresholded
// Gaussian noise N_t, M_t.

#include "arlink/matio.hpp"
#include "arlink/prox.hpp"
#include "arlink/rng.hpp"
#include "arlink/types.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

namespace arlink {

/// Support of the nonzero factor entries.
enum class FactorRange { Unit, Symmetric };  // U(0,1) or U(-1,1)

inline const char* to_string(FactorRange f) { return f == FactorRange::Unit ? "unit" : "symmetric"; }

struct GeneratorParams {
    Index n = 50;
    Index r = 5;
    Index horizon = 10;  // T: snapshots A_0..A_T are observed, A_{T+1} is held out
    double sigma = 0.5;
    double density_v = 0.3;
    double density_u = 0.3;
    double density_w = 0.3;
    std::optional<double> noise_threshold;  // defaults to sigma
    double w_norm = 0.9;                    // operator norm of W0 after rescaling
    FactorRange factor_range = FactorRange::Unit;
    bool clamp_nonneg = true;
    std::uint64_t seed = 0;

    double threshold() const { return noise_threshold.value_or(sigma); }

    void validate() const {
        if (n < 1) throw DomainError("n must be >= 1");
        if (r < 1 || r > n) throw DomainError("r must satisfy 1 <= r <= n");
        if (horizon < 1) throw DomainError("T must be >= 1");
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be >= 0");
        for (double f : {density_v, density_u, density_w}) {
            if (!(f > 0.0 && f <= 1.0)) throw DomainError("densities must lie in (0, 1]");
        }
        if (!(threshold() >= 0.0)) throw DomainError("noise threshold must be >= 0");
        if (!(w_norm > 0.0)) throw DomainError("w_norm must be > 0");
    }
};

struct SyntheticDataset {
    GraphSequence sequence;     // A_0..A_T
    Matrix a_next;              // A_{T+1}
    Matrix w0;
    Matrix v0;
    std::vector<Matrix> u;      // U_0..U_{T+1}
    double clamped_fraction = 0.0;  // share of entries of A_0..A_{T+1} raised to 0
    GeneratorParams params;
};

/// Entries sign(g)(|g| - threshold)_+ with g ~ N(0, sigma^2) i.i.d.
/// Draws a standard normal per entry even when sigma = 0, so streams stay
/// aligned across noise levels.
inline Matrix sparse_noise(Index rows, Index cols, double sigma, double threshold, Rng& rng) {
    if (!(sigma >= 0.0)) throw DomainError("sparse_noise: sigma must be >= 0");
    if (!(threshold >= 0.0)) throw DomainError("sparse_noise: threshold must be >= 0");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix out(rows, cols);
    for (Index k = 0; k < out.size(); ++k) {
        const double g = sigma * gauss(rng);
        const double mag = std::abs(g) - threshold;
        out(k) = mag > 0.0 ? std::copysign(mag, g) : 0.0;
    }
    return out;
}

namespace detail {

inline Matrix sparse_factor(Index rows, Index cols, double density, FactorRange range, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix out(rows, cols);
    for (Index k = 0; k < out.size(); ++k) {
        const bool keep = unit(rng) < density;
        const double v = range == FactorRange::Unit ? unit(rng) : 2.0 * unit(rng) - 1.0;
        out(k) = keep ? v : 0.0;
    }
    return out;
}

inline Index count_negative(const Matrix& m) { return (m.array() < 0.0).count(); }

}  // namespace detail

inline SyntheticDataset generate(const GeneratorParams& params) {
    params.validate();
    Rng rng(params.seed);
    const Index n = params.n;
    const Index r = params.r;

    Matrix v0 = detail::sparse_factor(n, r, params.density_v, params.factor_range, rng);
    Matrix u0 = detail::sparse_factor(n, r, params.density_u, params.factor_range, rng);
    Matrix w0;
    do {
        w0 = detail::sparse_factor(r, r, params.density_w, params.factor_range, rng);
    } while (w0.cwiseAbs().maxCoeff() == 0.0);
    w0 *= params.w_norm / operator_norm(w0);

    std::vector<Matrix> u{u0};
    std::vector<Matrix> a;
    Index clamped = 0;
    auto snapshot = [&](const Matrix& ut) {
        Matrix at = ut * v0.transpose() + sparse_noise(n, n, params.sigma, params.threshold(), rng);
        if (params.clamp_nonneg) {
            clamped += detail::count_negative(at);
            at = project_nonneg(at);
        }
        return at;
    };
    a.push_back(snapshot(u0));
    for (Index t = 1; t <= params.horizon + 1; ++t) {
        Matrix ut = u.back() * w0 + sparse_noise(n, r, params.sigma, params.threshold(), rng);
        a.push_back(snapshot(ut));
        u.push_back(std::move(ut));
    }
    Matrix a_next = std::move(a.back());
    a.pop_back();

    const double total = static_cast<double>(n * n * (params.horizon + 2));
    return SyntheticDataset{GraphSequence(std::move(a)), std::move(a_next), std::move(w0), std::move(v0),
                            std::move(u), static_cast<double>(clamped) / total, params};
}

/// Moore-Penrose pseudo-inverse via the SVD (singular values <= 1e-12 s_max dropped).
inline Matrix pseudo_inverse(const Matrix& m) {
    const Svd dec = svd(m);
    if (dec.singular_values.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    const double cutoff = 1e-12 * dec.singular_values(0);
    Vector inv = Vector::Zero(dec.singular_values.size());
    for (Index i = 0; i < inv.size(); ++i) {
        if (dec.singular_values(i) > cutoff) inv(i) = 1.0 / dec.singular_values(i);
    }
    return dec.V * inv.asDiagonal() * dec.U.transpose();
}

// ---------------------------------------------------------------------------
// Dataset directory: snapshot_XXX.mtx for A_0..A_T, truth/ for the hidden
// quantities, params.json echoing the generator settings.

inline nlohmann::ordered_json params_to_json(const GeneratorParams& p) {
    nlohmann::ordered_json j;
    j["n"] = p.n;
    j["r"] = p.r;
    j["T"] = p.horizon;
    j["sigma"] = p.sigma;
    j["noise_threshold"] = p.threshold();
    j["density"] = {{"v", p.density_v}, {"u", p.density_u}, {"w", p.density_w}};
    j["w_norm"] = p.w_norm;
    j["factor_range"] = to_string(p.factor_range);
    j["clamp_nonneg"] = p.clamp_nonneg;
    j["seed"] = p.seed;
    return j;
}

inline std::string snapshot_name(std::size_t t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snapshot_%03zu.mtx", t);
    return buf;
}

inline void save_dataset(const SyntheticDataset& ds, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "truth");
    for (std::size_t t = 0; t < ds.sequence.size(); ++t) write_matrix(ds.sequence[t], dir / snapshot_name(t));
    write_matrix(ds.a_next, dir / "truth" / "A_next.mtx");
    write_matrix(ds.w0, dir / "truth" / "W0.mtx");
    write_matrix(ds.v0, dir / "truth" / "V0.mtx");
    for (std::size_t t = 0; t < ds.u.size(); ++t) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "U_%03zu.mtx", t);
        write_matrix(ds.u[t], dir / "truth" / buf);
    }
    nlohmann::ordered_json meta = params_to_json(ds.params);
    meta["clamped_fraction"] = ds.clamped_fraction;
    write_text(dir / "params.json", meta.dump(2) + "\n");
}

/// Reads snapshot_000.mtx, snapshot_001.mtx, ... until the first gap.
inline GraphSequence load_sequence(const std::filesystem::path& dir) {
    std::vector<Matrix> snaps;
    for (std::size_t t = 0;; ++t) {
        const auto path = dir / snapshot_name(t);
        if (!std::filesystem::exists(path)) break;
        snaps.push_back(read_matrix(path));
    }
    if (snaps.empty()) throw IoError("no snapshot files in " + dir.string());
    return GraphSequence(std::move(snaps));
}

}  // namespace arlink
