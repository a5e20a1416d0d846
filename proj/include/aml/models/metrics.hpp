#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "json.hpp"

namespace aml::models {

struct ConfusionMatrix {
    std::uint64_t tn = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tp = 0;

    std::uint64_t total() const noexcept { return tn + fp + fn + tp; }
    bool operator==(const ConfusionMatrix&) const = default;
};

struct EvalMetrics {
    ConfusionMatrix confusion;
    double accuracy = 0.0;
    double f1 = 0.0;  // 2tp / (2tp + fp + fn); 0 when the denominator is 0
    double threshold = 0.5;

    bool operator==(const EvalMetrics&) const = default;
};

/// Metrics derived from a confusion matrix.
EvalMetrics metrics_from_confusion(const ConfusionMatrix& confusion, double threshold);

/// Predicted label = (probability >= threshold). Throws Error(invalid_input)
/// on empty or mismatched inputs.
EvalMetrics evaluate(std::span<const double> probabilities, std::span<const std::uint8_t> truth,
                     double threshold = 0.5);

nlohmann::json to_json(const EvalMetrics& metrics);
EvalMetrics metrics_from_json(const nlohmann::json& j);

/// "model,accuracy,f1" row with six decimals.
std::string metrics_csv_row(std::string_view model, const EvalMetrics& metrics);

}  // namespace aml::models
