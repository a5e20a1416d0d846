#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aml/lifecycle/registry.hpp"

namespace aml::lifecycle {

struct DriftThresholds {
    double psi = 0.2;
    double accuracy_drop = 0.02;
    std::size_t min_labeled = 200;
    double epsilon = 1e-4;  // replaces empty bins
};

void apply_json(DriftThresholds& thresholds, const nlohmann::json& j);
nlohmann::json to_json(const DriftThresholds& thresholds);

/// Σ (q - p) ln(q / p) over the union of categories; empty bins become epsilon.
double psi(const std::map<std::string, double>& reference, const std::map<std::string, double>& live,
           double epsilon = 1e-4);

struct Breach {
    std::string signal;  // "psi:<feature>" or "accuracy"
    double value = 0.0;
    double threshold = 0.0;
};

enum class Decision { none, retrain };
std::string_view decision_name(Decision decision) noexcept;

struct DriftReport {
    std::uint64_t window_id = 0;
    std::size_t window_size = 0;
    std::array<double, kFeatureCount> psi{};
    std::optional<double> live_accuracy;
    std::vector<Breach> breached;
    Decision decision = Decision::none;
};

nlohmann::json to_json(const DriftReport& report);

/// Outcome of one scored transaction once its label is known.
struct LabeledOutcome {
    bool predicted = false;
    bool actual = false;
};

/// Compares the live window against the training-time profile. The accuracy
/// signal needs at least min_labeled outcomes and breaches below
/// reference_accuracy - accuracy_drop. Throws Error(empty_input) for an
/// empty window.
DriftReport check_drift(std::uint64_t window_id, const ReferenceProfile& reference, std::span<const Transaction> window,
                        std::span<const LabeledOutcome> feedback, double reference_accuracy,
                        const DriftThresholds& thresholds = {});

struct TrainingOutcome {
    models::TrainedModel model;
    featstore::EncodingSchema schema;
    models::EvalMetrics validation;
    models::EvalMetrics test;
    ReferenceProfile profile;
};

struct RetrainHooks {
    std::function<std::vector<Transaction>()> load_latest;
    std::function<TrainingOutcome(std::span<const Transaction>, models::ModelKind, std::uint64_t seed)> train;
};

struct RetrainPolicy {
    double f1_guard = 0.005;
    std::uint64_t base_seed = 0;
    std::string date_partition = "2023-01-01";
    /// Kind trained when no version is active.
    models::ModelKind fallback_kind = models::ModelKind::random_forest;
};

struct RetrainResult {
    std::optional<int> version;
    bool activated = false;
    std::optional<std::string> failure;
};

/// On a retrain decision: trains the active kind on the latest data with a
/// seed derived from base_seed and the next version number, registers it,
/// and activates it iff its validation F1 >= active F1 - f1_guard. A failure
/// is journaled and leaves the active version untouched.
RetrainResult maybe_retrain(ModelRegistry& registry, const DriftReport& report, const RetrainHooks& hooks,
                            std::uint64_t tick, const RetrainPolicy& policy = {});

}  // namespace aml::lifecycle
