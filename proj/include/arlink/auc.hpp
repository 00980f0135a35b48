#pragma once
// Area under the ROC curve as the Mann-Whitney statistic, ties counted 1/2.

#include "arlink/baselines.hpp"
#include "arlink/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

namespace arlink {

struct LabeledScore {
    double score;
    bool positive;
};

inline double auc(std::vector<LabeledScore> items) {
    std::size_t pos = 0;
    for (const auto& it : items) {
        if (!std::isfinite(it.score)) throw DomainError("auc: non-finite score");
        pos += it.positive ? 1 : 0;
    }
    const std::size_t neg = items.size() - pos;
    if (pos == 0 || neg == 0) {
        throw DomainError("auc: truth has a single class (" + std::to_string(pos) + " positives, " +
                          std::to_string(neg) + " negatives)");
    }
    std::sort(items.begin(), items.end(),
              [](const LabeledScore& a, const LabeledScore& b) { return a.score < b.score; });
    // Sum of (1-based, tie-averaged) ranks of the positives.
    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        while (j < items.size() && items[j].score == items[i].score) {
            group_pos += items[j].positive ? 1 : 0;
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        rank_sum += avg_rank * static_cast<double>(group_pos);
        i = j;
    }
    const double p = static_cast<double>(pos);
    const double u = rank_sum - p * (p + 1.0) / 2.0;
    return u / (p * static_cast<double>(neg));
}

/// Off-diagonal positions (i, j), i != j, in column-major order.
inline std::vector<std::pair<Index, Index>> off_diagonal_positions(Index n) {
    std::vector<std::pair<Index, Index>> out;
    out.reserve(static_cast<std::size_t>(n * (n - 1)));
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            if (i != j) out.emplace_back(i, j);
        }
    }
    return out;
}

/// AUC of `scores` against truth binarized at `threshold` (entry > threshold
/// is an edge), over the given positions.
inline double auc(const Matrix& scores, const Matrix& truth, double threshold,
                  const std::vector<std::pair<Index, Index>>& positions) {
    require_same_shape(truth, scores, "auc scores");
    std::vector<LabeledScore> items;
    items.reserve(positions.size());
    for (const auto& [i, j] : positions) items.push_back({scores(i, j), truth(i, j) > threshold});
    return auc(std::move(items));
}

inline double auc(const ScoreMatrix& scores, const Matrix& truth, double threshold = 1e-6) {
    require_same_shape(truth, scores.scores, "auc scores");
    const Index n = truth.rows();
    std::vector<std::pair<Index, Index>> positions;
    if (scores.include_diagonal) {
        for (Index j = 0; j < truth.cols(); ++j)
            for (Index i = 0; i < n; ++i) positions.emplace_back(i, j);
    } else {
        if (truth.rows() != truth.cols()) throw DimensionError("auc: square matrices expected");
        positions = off_diagonal_positions(n);
    }
    return auc(scores.scores, truth, threshold, positions);
}

}  // namespace arlink
