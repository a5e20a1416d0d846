#include <algorithm>
#include <cmath>

#include "aml/common/error.hpp"
#include "aml/models/model.hpp"
#include "weighted_rows.hpp"

namespace aml::models {

namespace {

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + exp(z)) without overflow.
double softplus(double z) noexcept { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

/// Sparse view of the distinct rows: only non-zero entries are visited.
struct SparseRows {
    std::vector<std::size_t> start;
    std::vector<std::uint32_t> column;
    std::vector<double> value;

    explicit SparseRows(const Matrix& X) {
        start.reserve(X.rows() + 1);
        start.push_back(0);
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const auto row = X.row(i);
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (row[j] != 0.0) {
                    column.push_back(static_cast<std::uint32_t>(j));
                    value.push_back(row[j]);
                }
            }
            start.push_back(column.size());
        }
    }
};

struct WeightedObjective {
    const SparseRows& rows;
    std::span<const double> negative;
    std::span<const double> positive;
    double total_weight;
    double l2;

    void evaluate(std::span<const double> w, double b, LogisticObjective& out) const {
        std::fill(out.grad_weights.begin(), out.grad_weights.end(), 0.0);
        out.grad_bias = 0.0;
        double loss = 0.0;
        const std::size_t n = negative.size();
        for (std::size_t u = 0; u < n; ++u) {
            double z = b;
            for (std::size_t k = rows.start[u]; k < rows.start[u + 1]; ++k) z += w[rows.column[k]] * rows.value[k];
            loss += positive[u] * softplus(-z) + negative[u] * softplus(z);
            const double residual = sigmoid(z) * (positive[u] + negative[u]) - positive[u];
            out.grad_bias += residual;
            for (std::size_t k = rows.start[u]; k < rows.start[u + 1]; ++k) {
                out.grad_weights[rows.column[k]] += residual * rows.value[k];
            }
        }
        const double inv = 1.0 / total_weight;
        double penalty = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j) {
            out.grad_weights[j] = out.grad_weights[j] * inv + l2 * w[j];
            penalty += w[j] * w[j];
        }
        out.grad_bias *= inv;
        out.loss = loss * inv + 0.5 * l2 * penalty;
    }
};

}  // namespace

LogisticObjective logistic_objective(const Matrix& X, std::span<const std::uint8_t> y, std::span<const double> weights,
                                     double bias, double l2) {
    if (X.rows() != y.size() || weights.size() != X.cols()) {
        throw Error(Errc::invalid_input, "logistic objective: dimension mismatch");
    }
    const detail::WeightedRows rows = detail::compress_rows(X, y);
    const SparseRows sparse(rows.X);
    double total = 0.0;
    for (std::size_t u = 0; u < rows.negative.size(); ++u) total += rows.negative[u] + rows.positive[u];
    WeightedObjective objective{sparse, rows.negative, rows.positive, total, l2};
    LogisticObjective out;
    out.grad_weights.assign(X.cols(), 0.0);
    objective.evaluate(weights, bias, out);
    return out;
}

TrainedModel train_logistic(const Matrix& X, std::span<const std::uint8_t> y, const LogisticHyper& hyper,
                            std::vector<double>* loss_trace) {
    detail::check_training_input(X, y);
    if (!(hyper.learning_rate > 0.0) || hyper.max_iters < 0 || hyper.l2 < 0.0) {
        throw Error(Errc::config, "logistic hyperparameters out of range");
    }
    const detail::WeightedRows rows = detail::compress_rows(X, y);
    const SparseRows sparse(rows.X);
    WeightedObjective objective{sparse, rows.negative, rows.positive, static_cast<double>(X.rows()), hyper.l2};

    LogisticParams params;
    params.weights.assign(X.cols(), 0.0);
    LogisticObjective state;
    state.grad_weights.assign(X.cols(), 0.0);
    if (loss_trace) loss_trace->clear();

    int iter = 0;
    for (; iter < hyper.max_iters; ++iter) {
        objective.evaluate(params.weights, params.bias, state);
        if (loss_trace) loss_trace->push_back(state.loss);
        double max_grad = std::abs(state.grad_bias);
        for (double g : state.grad_weights) max_grad = std::max(max_grad, std::abs(g));
        if (max_grad < hyper.tolerance) break;
        for (std::size_t j = 0; j < params.weights.size(); ++j) {
            params.weights[j] -= hyper.learning_rate * state.grad_weights[j];
        }
        params.bias -= hyper.learning_rate * state.grad_bias;
    }
    params.iterations = iter;

    TrainedModel model;
    model.kind = ModelKind::logistic_regression;
    model.width = X.cols();
    model.params = std::move(params);
    model.hyperparameters = {{"learning_rate", hyper.learning_rate},
                             {"tolerance", hyper.tolerance},
                             {"max_iters", hyper.max_iters},
                             {"l2", hyper.l2}};
    return model;
}

}  // namespace aml::models
