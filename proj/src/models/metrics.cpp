#include "aml/models/metrics.hpp"

#include <fmt/format.h>

#include "aml/common/error.hpp"

namespace aml::models {

using nlohmann::json;

EvalMetrics metrics_from_confusion(const ConfusionMatrix& c, double threshold) {
    EvalMetrics m;
    m.confusion = c;
    m.threshold = threshold;
    const auto total = c.total();
    m.accuracy = total ? static_cast<double>(c.tp + c.tn) / static_cast<double>(total) : 0.0;
    const auto denominator = 2 * c.tp + c.fp + c.fn;
    m.f1 = denominator ? static_cast<double>(2 * c.tp) / static_cast<double>(denominator) : 0.0;
    return m;
}

EvalMetrics evaluate(std::span<const double> probabilities, std::span<const std::uint8_t> truth, double threshold) {
    if (probabilities.empty()) throw Error(Errc::invalid_input, "cannot evaluate an empty prediction set");
    if (probabilities.size() != truth.size()) {
        throw Error(Errc::invalid_input,
                    fmt::format("{} predictions but {} labels", probabilities.size(), truth.size()));
    }
    ConfusionMatrix c;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const bool predicted = probabilities[i] >= threshold;
        if (truth[i]) {
            ++(predicted ? c.tp : c.fn);
        } else {
            ++(predicted ? c.fp : c.tn);
        }
    }
    return metrics_from_confusion(c, threshold);
}

json to_json(const EvalMetrics& m) {
    return json{{"tn", m.confusion.tn}, {"fp", m.confusion.fp},   {"fn", m.confusion.fn},
                {"tp", m.confusion.tp}, {"accuracy", m.accuracy}, {"f1", m.f1},
                {"threshold", m.threshold}};
}

EvalMetrics metrics_from_json(const json& j) {
    try {
        ConfusionMatrix c{j.at("tn").get<std::uint64_t>(), j.at("fp").get<std::uint64_t>(),
                          j.at("fn").get<std::uint64_t>(), j.at("tp").get<std::uint64_t>()};
        return metrics_from_confusion(c, j.at("threshold").get<double>());
    } catch (const json::exception& e) {
        throw Error(Errc::data, fmt::format("malformed metrics: {}", e.what()));
    }
}

std::string metrics_csv_row(std::string_view model, const EvalMetrics& m) {
    return fmt::format("{},{:.6f},{:.6f}", model, m.accuracy, m.f1);
}

}  // namespace aml::models
