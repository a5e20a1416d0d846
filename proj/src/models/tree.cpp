#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/models/model.hpp"
#include "tree_builder.hpp"
#include "weighted_rows.hpp"

namespace aml::models {

namespace detail {

namespace {

struct Entry {
    double value;
    double negative;
    double positive;
};

/// Weighted child impurity contribution: w * gini = w - (n^2 + p^2) / w.
double child_term(double negative, double positive) {
    const double w = negative + positive;
    return w - (negative * negative + positive * positive) / w;
}

struct Pending {
    int node;
    std::vector<std::uint32_t> rows;
    int depth;
};

}  // namespace

Tree build_tree(const Matrix& X, std::span<const double> negative, std::span<const double> positive,
                const TreeBuildOptions& options) {
    Tree tree;
    std::vector<std::uint32_t> root_rows;
    for (std::size_t u = 0; u < negative.size(); ++u) {
        if (negative[u] + positive[u] > 0.0) root_rows.push_back(static_cast<std::uint32_t>(u));
    }
    tree.nodes.emplace_back();
    std::vector<Pending> stack;
    stack.push_back(Pending{0, std::move(root_rows), 0});

    std::vector<Entry> entries;
    std::vector<std::size_t> candidates;
    while (!stack.empty()) {
        Pending job = std::move(stack.back());
        stack.pop_back();

        double wn = 0.0, wp = 0.0;
        for (auto u : job.rows) {
            wn += negative[u];
            wp += positive[u];
        }
        const double total = wn + wp;
        {
            TreeNode& node = tree.nodes[job.node];
            node.weight = total;
            node.value = total > 0.0 ? wp / total : 0.0;
        }
        if (job.depth >= options.max_depth || wn == 0.0 || wp == 0.0 || total < 2.0 * options.min_leaf) continue;

        candidates.clear();
        const auto first = X.row(job.rows.front());
        for (std::size_t j = 0; j < X.cols(); ++j) {
            for (auto u : job.rows) {
                if (X(u, j) != first[j]) {
                    candidates.push_back(j);
                    break;
                }
            }
        }
        if (options.features_per_split > 0 &&
            static_cast<std::size_t>(options.features_per_split) < candidates.size()) {
            const auto k = static_cast<std::size_t>(options.features_per_split);
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(options.rng->below(candidates.size() - i));
                std::swap(candidates[i], candidates[j]);
            }
            candidates.resize(k);
            std::sort(candidates.begin(), candidates.end());
        }

        int best_feature = -1;
        double best_threshold = 0.0;
        double best_score = 0.0;
        for (std::size_t j : candidates) {
            entries.clear();
            for (auto u : job.rows) entries.push_back(Entry{X(u, j), negative[u], positive[u]});
            std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.value < b.value; });
            double ln = 0.0, lp = 0.0;
            for (std::size_t i = 0; i + 1 < entries.size(); ++i) {
                ln += entries[i].negative;
                lp += entries[i].positive;
                if (entries[i].value == entries[i + 1].value) continue;
                const double left = ln + lp;
                const double right = total - left;
                if (left < options.min_leaf || right < options.min_leaf) continue;
                const double score = (child_term(ln, lp) + child_term(wn - ln, wp - lp)) / total;
                if (best_feature < 0 || score < best_score - kSplitTieTolerance) {
                    best_feature = static_cast<int>(j);
                    best_threshold = 0.5 * (entries[i].value + entries[i + 1].value);
                    best_score = score;
                }
            }
        }
        if (best_feature < 0) continue;

        std::vector<std::uint32_t> left_rows, right_rows;
        for (auto u : job.rows) {
            (X(u, static_cast<std::size_t>(best_feature)) < best_threshold ? left_rows : right_rows).push_back(u);
        }
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        TreeNode& node = tree.nodes[job.node];
        node.feature = best_feature;
        node.threshold = best_threshold;
        node.left = left;
        node.right = left + 1;
        stack.push_back(Pending{left + 1, std::move(right_rows), job.depth + 1});
        stack.push_back(Pending{left, std::move(left_rows), job.depth + 1});
    }
    return tree;
}

}  // namespace detail

double Tree::predict(std::span<const double> x) const noexcept {
    int i = 0;
    while (nodes[i].feature >= 0) {
        i = x[static_cast<std::size_t>(nodes[i].feature)] < nodes[i].threshold ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].value;
}

int Tree::depth() const noexcept {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int deepest = 0;
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (nodes[i].feature >= 0) {
            stack.emplace_back(nodes[i].left, d + 1);
            stack.emplace_back(nodes[i].right, d + 1);
        }
    }
    return deepest;
}

std::vector<int> Tree::features_used() const {
    std::set<int> used;
    for (const auto& n : nodes) {
        if (n.feature >= 0) used.insert(n.feature);
    }
    return {used.begin(), used.end()};
}

TrainedModel train_tree(const Matrix& X, std::span<const std::uint8_t> y, const TreeHyper& hyper) {
    detail::check_training_input(X, y);
    if (hyper.max_depth < 0 || hyper.min_leaf < 1.0) throw Error(Errc::config, "tree hyperparameters out of range");
    const detail::WeightedRows rows = detail::compress_rows(X, y);
    detail::TreeBuildOptions options;
    options.max_depth = hyper.max_depth;
    options.min_leaf = hyper.min_leaf;

    TrainedModel model;
    model.kind = ModelKind::decision_tree;
    model.width = X.cols();
    model.params = detail::build_tree(rows.X, rows.negative, rows.positive, options);
    model.hyperparameters = {{"max_depth", hyper.max_depth}, {"min_leaf", hyper.min_leaf}, {"criterion", "gini"}};
    return model;
}

}  // namespace aml::models
