#pragma once

#include "arlink/matio.hpp"
#include "arlink/types.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using arlink::Index;
using arlink::Matrix;

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(rows, cols);
    for (Index k = 0; k < m.size(); ++k) m(k) = g(rng);
    return m;
}

inline Matrix uniform(Index rows, Index cols, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Index k = 0; k < m.size(); ++k) m(k) = u(rng);
    return m;
}

inline double rel_diff(const Matrix& a, const Matrix& b) {
    const double scale = std::max(1e-300, b.norm());
    return (a - b).norm() / scale;
}

/// n x r matrix with orthonormal columns.
inline Matrix orthonormal(Index n, Index r, std::mt19937_64& rng) {
    const Matrix g = gaussian(n, r, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(n, r);
}

/// T+1 nonnegative snapshots with entries in [0, 1).
inline arlink::GraphSequence random_sequence(Index n, Index horizon, std::mt19937_64& rng) {
    std::vector<Matrix> snaps;
    for (Index t = 0; t <= horizon; ++t) snaps.push_back(uniform(n, n, rng));
    return arlink::GraphSequence(std::move(snaps));
}

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("arlink_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace testing_support
