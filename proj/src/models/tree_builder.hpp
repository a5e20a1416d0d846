#pragma once

#include <span>

#include "aml/common/rng.hpp"
#include "aml/models/model.hpp"

namespace aml::models::detail {

struct TreeBuildOptions {
    int max_depth = 12;
    double min_leaf = 5.0;
    int features_per_split = 0;  // 0: every non-constant column
    Rng* rng = nullptr;          // required when sampling features
};

/// Scores closer than this are treated as ties (first column/threshold wins).
inline constexpr double kSplitTieTolerance = 1e-12;

/// Grows one Gini tree over weighted distinct rows. Rows with zero total
/// weight are ignored.
Tree build_tree(const Matrix& X, std::span<const double> negative, std::span<const double> positive,
                const TreeBuildOptions& options);

}  // namespace aml::models::detail
