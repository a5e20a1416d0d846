#include "aml/lifecycle/drift.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>

#include "aml/common/error.hpp"
#include "aml/common/rng.hpp"

namespace aml::lifecycle {

using nlohmann::json;

void apply_json(DriftThresholds& t, const json& j) {
    if (!j.is_object()) throw Error(Errc::config, "drift must be an object");
    for (const auto& [key, value] : j.items()) {
        try {
            if (key == "psi") t.psi = value.get<double>();
            else if (key == "accuracy_drop") t.accuracy_drop = value.get<double>();
            else if (key == "min_labeled") t.min_labeled = value.get<std::size_t>();
            else if (key == "epsilon") t.epsilon = value.get<double>();
            else throw Error(Errc::config, fmt::format("unknown drift key '{}'", key));
        } catch (const json::exception& e) {
            throw Error(Errc::config, fmt::format("drift.{}: {}", key, e.what()));
        }
    }
    if (!(t.psi > 0.0) || !(t.epsilon > 0.0) || t.accuracy_drop < 0.0) {
        throw Error(Errc::config, "drift thresholds must be positive");
    }
}

json to_json(const DriftThresholds& t) {
    return json{{"psi", t.psi}, {"accuracy_drop", t.accuracy_drop}, {"min_labeled", t.min_labeled}, {"epsilon", t.epsilon}};
}

double psi(const std::map<std::string, double>& reference, const std::map<std::string, double>& live, double epsilon) {
    std::set<std::string> categories;
    for (const auto& [c, p] : reference) categories.insert(c);
    for (const auto& [c, q] : live) categories.insert(c);
    double total = 0.0;
    for (const auto& c : categories) {
        const auto r = reference.find(c);
        const auto l = live.find(c);
        double p = r == reference.end() ? 0.0 : r->second;
        double q = l == live.end() ? 0.0 : l->second;
        if (p <= 0.0) p = epsilon;
        if (q <= 0.0) q = epsilon;
        if (p != q) total += (q - p) * std::log(q / p);
    }
    return total;
}

std::string_view decision_name(Decision decision) noexcept {
    return decision == Decision::retrain ? "retrain" : "none";
}

json to_json(const DriftReport& r) {
    json psi_values = json::object();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        psi_values[std::string(txgen::feature_name(txgen::kFeatures[f]))] = r.psi[f];
    }
    json breached = json::array();
    for (const auto& b : r.breached) breached.push_back({{"signal", b.signal}, {"value", b.value}, {"threshold", b.threshold}});
    return json{{"window_id", r.window_id},
                {"window_size", r.window_size},
                {"psi", psi_values},
                {"live_accuracy", r.live_accuracy ? json(*r.live_accuracy) : json(nullptr)},
                {"breached", breached},
                {"decision", decision_name(r.decision)}};
}

DriftReport check_drift(std::uint64_t window_id, const ReferenceProfile& reference, std::span<const Transaction> window,
                        std::span<const LabeledOutcome> feedback, double reference_accuracy,
                        const DriftThresholds& thresholds) {
    if (window.empty()) throw Error(Errc::empty_input, "drift window is empty");
    DriftReport report;
    report.window_id = window_id;
    report.window_size = window.size();
    const auto live = build_profile(window);
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
        report.psi[f] = psi(reference[f], live[f], thresholds.epsilon);
        if (report.psi[f] > thresholds.psi) {
            report.breached.push_back({fmt::format("psi:{}", txgen::feature_name(txgen::kFeatures[f])), report.psi[f],
                                       thresholds.psi});
        }
    }
    if (feedback.size() >= thresholds.min_labeled && !feedback.empty()) {
        std::size_t correct = 0;
        for (const auto& o : feedback) correct += o.predicted == o.actual;
        const double accuracy = static_cast<double>(correct) / static_cast<double>(feedback.size());
        report.live_accuracy = accuracy;
        const double floor = reference_accuracy - thresholds.accuracy_drop;
        if (accuracy < floor) report.breached.push_back({"accuracy", accuracy, floor});
    }
    report.decision = report.breached.empty() ? Decision::none : Decision::retrain;
    return report;
}

RetrainResult maybe_retrain(ModelRegistry& registry, const DriftReport& report, const RetrainHooks& hooks,
                            std::uint64_t tick, const RetrainPolicy& policy) {
    RetrainResult result;
    if (report.decision != Decision::retrain) return result;

    const auto active = registry.active();
    const auto kind = active ? active->kind : policy.fallback_kind;
    const auto next_version = registry.list().size() + 1;
    const auto seed = derive_seed(policy.base_seed, next_version);
    try {
        const auto data = hooks.load_latest();
        const auto outcome = hooks.train(data, kind, seed);
        const int version = registry.register_model(
            {outcome.model, outcome.schema, outcome.validation, outcome.test, outcome.profile, tick, policy.date_partition});
        result.version = version;
        const double new_f1 = outcome.validation.f1;
        const bool passes = !active || new_f1 >= active->metrics.f1 - policy.f1_guard;
        if (passes) {
            registry.activate(version, tick,
                              json{{"reason", "retrain"},
                                   {"window_id", report.window_id},
                                   {"f1", new_f1},
                                   {"previous_version", active ? json(active->version) : json(nullptr)},
                                   {"previous_f1", active ? json(active->metrics.f1) : json(nullptr)},
                                   {"guard", policy.f1_guard}});
            result.activated = true;
        }
    } catch (const Error& e) {
        result.failure = fmt::format("{}: {}", errc_name(e.code()), e.what());
        registry.record_failure(e.what(), tick,
                                json{{"code", errc_name(e.code())}, {"window_id", report.window_id},
                                     {"kind", models::kind_name(kind)}});
    }
    return result;
}

}  // namespace aml::lifecycle
