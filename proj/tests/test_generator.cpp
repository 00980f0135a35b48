#include "arlink/generator.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace arlink;

namespace {

GeneratorParams small_params(std::uint64_t seed, double sigma = 0.5) {
    GeneratorParams p;
    p.n = 20;
    p.r = 3;
    p.horizon = 6;
    p.sigma = sigma;
    p.seed = seed;
    return p;
}

double max_recursion_residual(const SyntheticDataset& ds) {
    const Matrix proj = pseudo_inverse(ds.v0).transpose();
    double worst = 0.0;
    for (std::size_t t = 1; t < ds.sequence.size(); ++t) {
        const Matrix prev = ds.sequence[t - 1] * proj;
        const Matrix cur = ds.sequence[t] * proj;
        worst = std::max(worst, (cur - prev * ds.w0).norm());
    }
    return worst;
}

double mean_recursion_residual(const SyntheticDataset& ds) {
    const Matrix proj = pseudo_inverse(ds.v0).transpose();
    double sum = 0.0;
    for (std::size_t t = 1; t < ds.sequence.size(); ++t) {
        sum += (ds.sequence[t] * proj - ds.sequence[t - 1] * proj * ds.w0).norm();
    }
    return sum / static_cast<double>(ds.sequence.size() - 1);
}

}  // namespace

TEST_CASE("sparse noise without threshold has Gaussian variance") {
    Rng rng(1);
    const double sigma = 0.7;
    const Matrix m = sparse_noise(1000, 100, sigma, 0.0, rng);
    const double mean = m.mean();
    const double var = (m.array() - mean).square().sum() / static_cast<double>(m.size() - 1);
    // Standard error of the sample variance: sigma^2 sqrt(2 / (N - 1)).
    const double se = sigma * sigma * std::sqrt(2.0 / static_cast<double>(m.size() - 1));
    CHECK(std::abs(var - sigma * sigma) < 3.0 * se);
}

TEST_CASE("thresholded noise matches the Gaussian tail") {
    Rng rng(2);
    const double sigma = 1.3;
    const Matrix m = sparse_noise(1000, 100, sigma, 3.0 * sigma, rng);
    const double frac = static_cast<double>((m.array() != 0.0).count()) / static_cast<double>(m.size());
    const double p = std::erfc(3.0 / std::sqrt(2.0));  // 2 (1 - Phi(3))
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(m.size()));
    CHECK(std::abs(frac - p) < 3.0 * se);
    // Survivors are shrunk toward zero by the threshold.
    for (Index k = 0; k < m.size(); ++k) CHECK(std::abs(m(k)) < 10.0 * sigma);
}

TEST_CASE("sparse noise rejects invalid parameters") {
    Rng rng(3);
    CHECK_THROWS_AS(sparse_noise(2, 2, -1.0, 0.0, rng), DomainError);
    CHECK_THROWS_AS(sparse_noise(2, 2, 1.0, -1.0, rng), DomainError);
    CHECK(sparse_noise(3, 3, 0.0, 0.0, rng).isZero(0.0));
}

TEST_CASE("noiseless data follow the feature recursion exactly") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SyntheticDataset ds = generate(small_params(seed, 0.0));
        CHECK(max_recursion_residual(ds) < 1e-10);
        for (std::size_t t = 0; t < ds.sequence.size(); ++t) {
            Eigen::JacobiSVD<Matrix> sv(ds.sequence[t]);
            const auto s = sv.singularValues();
            const double cutoff = 1e-10 * std::max(1.0, s(0));
            CHECK((s.array() > cutoff).count() <= 3);
        }
        CHECK(ds.clamped_fraction == 0.0);
    }
}

TEST_CASE("generation is deterministic in the seed") {
    const SyntheticDataset a = generate(small_params(42));
    const SyntheticDataset b = generate(small_params(42));
    const SyntheticDataset c = generate(small_params(43));
    for (std::size_t t = 0; t < a.sequence.size(); ++t) {
        CHECK((a.sequence[t] - b.sequence[t]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((a.a_next - b.a_next).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.w0 - b.w0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.a_next - c.a_next).norm() > 0.0);
}

TEST_CASE("default sizes produce the expected shapes") {
    GeneratorParams p;
    p.seed = 7;
    const SyntheticDataset ds = generate(p);
    CHECK(ds.sequence.size() == 11);
    CHECK(ds.sequence.n() == 50);
    CHECK(ds.a_next.rows() == 50);
    CHECK(ds.a_next.cols() == 50);
    CHECK(ds.w0.rows() == 5);
    CHECK(ds.w0.cols() == 5);
    CHECK(ds.v0.rows() == 50);
    CHECK(ds.u.size() == 12);
}

TEST_CASE("W0 is rescaled to the requested operator norm") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        GeneratorParams p = small_params(seed);
        const SyntheticDataset ds = generate(p);
        const double op = Eigen::JacobiSVD<Matrix>(ds.w0).singularValues()(0);
        CHECK(std::abs(op - 0.9) < 1e-9);
    }
}

TEST_CASE("snapshots are sparse and nonnegative") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        GeneratorParams p;
        p.seed = seed;
        const SyntheticDataset ds = generate(p);
        for (std::size_t t = 0; t < ds.sequence.size(); ++t) {
            const Matrix& a = ds.sequence[t];
            const double nz = static_cast<double>((a.array() != 0.0).count()) / static_cast<double>(a.size());
            CHECK(nz < 1.0);
            CHECK(a.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("symmetric factors are clamped to nonnegative snapshots") {
    GeneratorParams p = small_params(5);
    p.factor_range = FactorRange::Symmetric;
    const SyntheticDataset ds = generate(p);
    CHECK(ds.clamped_fraction > 0.0);
    CHECK(ds.a_next.minCoeff() >= 0.0);
    // Without clamping the negative entries cannot form a graph sequence.
    p.clamp_nonneg = false;
    CHECK_THROWS_AS(generate(p), DomainError);
}

TEST_CASE("recursion residual grows with the noise level") {
    const double sigmas[] = {0.0, 0.25, 0.5};
    double means[3] = {0.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k) {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            means[k] += mean_recursion_residual(generate(small_params(seed, sigmas[k]))) / 20.0;
        }
    }
    CHECK(means[0] < 1e-10);
    CHECK(means[1] > means[0]);
    CHECK(means[2] > means[1]);
}

TEST_CASE("generator parameters are validated") {
    GeneratorParams p;
    p.r = 60;
    CHECK_THROWS_AS(generate(p), DomainError);
    p = GeneratorParams{};
    p.horizon = 0;
    CHECK_THROWS_AS(generate(p), DomainError);
    p = GeneratorParams{};
    p.sigma = -0.1;
    CHECK_THROWS_AS(generate(p), DomainError);
    p = GeneratorParams{};
    p.density_u = 0.0;
    CHECK_THROWS_AS(generate(p), DomainError);
}

TEST_CASE("datasets round-trip through a directory") {
    const auto dir = testing_support::scratch_dir("generator");
    const SyntheticDataset ds = generate(small_params(11));
    save_dataset(ds, dir);
    const GraphSequence back = load_sequence(dir);
    REQUIRE(back.size() == ds.sequence.size());
    for (std::size_t t = 0; t < back.size(); ++t) {
        CHECK((back[t] - ds.sequence[t]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((read_matrix(dir / "truth" / "A_next.mtx") - ds.a_next).cwiseAbs().maxCoeff() == 0.0);
    CHECK(std::filesystem::exists(dir / "params.json"));
    CHECK_THROWS_AS(load_sequence(dir / "truth"), IoError);
}

TEST_CASE("pseudo-inverse satisfies the Penrose identities") {
    std::mt19937_64 rng(12);
    const Matrix m = testing_support::gaussian(7, 3, rng);
    const Matrix p = pseudo_inverse(m);
    CHECK((m * p * m - m).norm() < 1e-12);
    CHECK((p * m * p - p).norm() < 1e-12);
    CHECK((p * m - Matrix::Identity(3, 3)).norm() < 1e-12);
}
