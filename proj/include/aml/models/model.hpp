#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "aml/models/matrix.hpp"

namespace aml::models {

enum class ModelKind { logistic_regression, decision_tree, random_forest };

std::string_view kind_name(ModelKind kind) noexcept;
ModelKind kind_from_name(std::string_view name);

struct LogisticHyper {
    double learning_rate = 0.1;
    double tolerance = 1e-6;  // stop when the gradient max-norm falls below
    int max_iters = 5'000;
    double l2 = 0.0;
};

struct TreeHyper {
    int max_depth = 12;
    double min_leaf = 5.0;  // minimum sample weight per child
};

struct ForestHyper {
    int n_trees = 50;
    int max_depth = 12;
    double min_leaf = 5.0;
    int features_per_split = 0;  // 0 selects ceil(sqrt(width))
    bool bootstrap = true;
    std::uint64_t seed = 7;
};

struct LogisticParams {
    std::vector<double> weights;
    double bias = 0.0;
    int iterations = 0;
};

/// Flat binary tree; node 0 is the root. A node with feature < 0 is a leaf.
/// Internal nodes send x[feature] < threshold to `left`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;   // positive-class fraction of the node's training weight
    double weight = 0.0;  // training weight reaching the node
};

struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const noexcept;
    int depth() const noexcept;
    /// Distinct split columns, ascending.
    std::vector<int> features_used() const;
};

struct ForestParams {
    std::vector<Tree> trees;
};

/// A fitted classifier bound to the encoding schema it was trained with.
struct TrainedModel {
    ModelKind kind = ModelKind::logistic_regression;
    std::variant<LogisticParams, Tree, ForestParams> params;
    std::uint64_t schema_hash = 0;
    std::uint64_t train_seed = 0;
    std::size_t width = 0;
    nlohmann::json hyperparameters = nlohmann::json::object();
};

/// Mean log-loss (plus l2/2 * |w|^2) and its analytic gradient.
struct LogisticObjective {
    double loss = 0.0;
    std::vector<double> grad_weights;
    double grad_bias = 0.0;
};

LogisticObjective logistic_objective(const Matrix& X, std::span<const std::uint8_t> y, std::span<const double> weights,
                                     double bias, double l2 = 0.0);

/// Full-batch gradient descent from zero weights. When `loss_trace` is given
/// it receives the loss before every update.
TrainedModel train_logistic(const Matrix& X, std::span<const std::uint8_t> y, const LogisticHyper& hyper = {},
                            std::vector<double>* loss_trace = nullptr);

/// CART with Gini impurity. Ties between equally good splits go to the lowest
/// column, then the lowest threshold.
TrainedModel train_tree(const Matrix& X, std::span<const std::uint8_t> y, const TreeHyper& hyper = {});

/// Bagged trees with per-split random feature subsets. Tree t draws from
/// Rng(seed + t); trees train in parallel with bit-identical results.
TrainedModel train_forest(const Matrix& X, std::span<const std::uint8_t> y, const ForestHyper& hyper = {});

/// Probability of the positive class for one row. Throws Error(incompatible)
/// on a width mismatch.
double predict_row(const TrainedModel& model, std::span<const double> x);

std::vector<double> predict_proba(const TrainedModel& model, const Matrix& X);

/// Per-tree probabilities of a forest for one row.
std::vector<double> tree_probabilities(const TrainedModel& forest, std::span<const double> x);

/// Versioned JSON: {format_version, kind, schema_hash, train_seed, width,
/// hyperparameters, parameters}; trees as nested node records.
nlohmann::json to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);

}  // namespace aml::models
