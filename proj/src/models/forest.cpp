#include <algorithm>
#include <cmath>
#include <thread>

#include "aml/common/error.hpp"
#include "aml/common/rng.hpp"
#include "aml/models/model.hpp"
#include "tree_builder.hpp"
#include "weighted_rows.hpp"

namespace aml::models {

namespace {

int resolve_features_per_split(int requested, std::size_t width) {
    if (requested > 0) return requested;
    return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(width))));
}

Tree grow_member(const detail::WeightedRows& rows, std::span<const std::uint8_t> y, const ForestHyper& hyper,
                 int features_per_split, int index) {
    Rng rng(hyper.seed + static_cast<std::uint64_t>(index));
    std::vector<double> negative;
    std::vector<double> positive;
    if (hyper.bootstrap) {
        negative.assign(rows.negative.size(), 0.0);
        positive.assign(rows.positive.size(), 0.0);
        const std::size_t n = y.size();
        for (std::size_t draw = 0; draw < n; ++draw) {
            const auto i = static_cast<std::size_t>(rng.below(n));
            (y[i] ? positive : negative)[rows.unique_of[i]] += 1.0;
        }
    } else {
        negative = rows.negative;
        positive = rows.positive;
    }
    detail::TreeBuildOptions options;
    options.max_depth = hyper.max_depth;
    options.min_leaf = hyper.min_leaf;
    options.features_per_split = features_per_split;
    options.rng = &rng;
    return detail::build_tree(rows.X, negative, positive, options);
}

}  // namespace

TrainedModel train_forest(const Matrix& X, std::span<const std::uint8_t> y, const ForestHyper& hyper) {
    detail::check_training_input(X, y);
    if (hyper.n_trees < 1 || hyper.max_depth < 0 || hyper.min_leaf < 1.0 || hyper.features_per_split < 0) {
        throw Error(Errc::config, "forest hyperparameters out of range");
    }
    const detail::WeightedRows rows = detail::compress_rows(X, y);
    const int k = resolve_features_per_split(hyper.features_per_split, X.cols());

    ForestParams params;
    params.trees.resize(static_cast<std::size_t>(hyper.n_trees));
    const unsigned workers = std::clamp<unsigned>(std::thread::hardware_concurrency(), 1u,
                                                  static_cast<unsigned>(hyper.n_trees));
    if (workers == 1) {
        for (int t = 0; t < hyper.n_trees; ++t) params.trees[t] = grow_member(rows, y, hyper, k, t);
    } else {
        std::vector<std::jthread> pool;
        std::vector<std::exception_ptr> failures(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (int t = static_cast<int>(w); t < hyper.n_trees; t += static_cast<int>(workers)) {
                        params.trees[t] = grow_member(rows, y, hyper, k, t);
                    }
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        }
        pool.clear();
        for (auto& f : failures) {
            if (f) std::rethrow_exception(f);
        }
    }

    TrainedModel model;
    model.kind = ModelKind::random_forest;
    model.width = X.cols();
    model.train_seed = hyper.seed;
    model.params = std::move(params);
    model.hyperparameters = {{"n_trees", hyper.n_trees},         {"max_depth", hyper.max_depth},
                             {"min_leaf", hyper.min_leaf},       {"features_per_split", k},
                             {"bootstrap", hyper.bootstrap},     {"seed", hyper.seed},
                             {"criterion", "gini"}};
    return model;
}

}  // namespace aml::models
