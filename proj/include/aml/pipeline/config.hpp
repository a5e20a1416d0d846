#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"

#include "aml/lifecycle/drift.hpp"
#include "aml/models/model.hpp"
#include "aml/streamproc/processor.hpp"
#include "aml/txgen/generator.hpp"

namespace aml::pipeline {

struct TopicConfig {
    std::string name = "transactions";
    int partitions = 4;
    /// Simulated ticks between consecutive ingested records.
    std::uint64_t ticks_per_record = 2;
};

struct TrainingConfig {
    models::LogisticHyper logistic;
    models::TreeHyper tree;
    models::ForestHyper forest;  // seed is derived from the pipeline seed
    double threshold = 0.5;
};

/// Second-phase generator settings for the drift drill.
struct DemoConfig {
    std::uint64_t baseline_count = 40'000;
    std::uint64_t shifted_count = 40'000;
    std::uint64_t window_size = 5'000;
    /// Share given to the dominant currency after the shift; the rest is
    /// rescaled proportionally.
    double dominant_currency_share = 0.4;
    /// Same for the dominant bank location (sender and receiver).
    double dominant_location_share = 0.45;
    /// Rules prepended to the generator's planted rules after the shift.
    std::vector<txgen::PlantedRule> shifted_rules;
    /// Generator keys overlaid last.
    nlohmann::json shift_overlay = nlohmann::json::object();

    static DemoConfig defaults();
};

struct PipelineConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path report_dir;  // empty: <data_dir>/reports
    std::filesystem::path dataset;     // empty: <data_dir>/dataset.jsonl
    std::uint64_t seed = 42;
    txgen::GeneratorConfig generator = txgen::GeneratorConfig::defaults();
    TopicConfig topic;
    streamproc::StreamConfig stream;
    TrainingConfig training;
    lifecycle::DriftThresholds drift;
    double f1_guard = 0.005;
    DemoConfig demo = DemoConfig::defaults();

    std::filesystem::path reports() const { return report_dir.empty() ? data_dir / "reports" : report_dir; }
    std::filesystem::path dataset_path() const { return dataset.empty() ? data_dir / "dataset.jsonl" : dataset; }

    /// Sets the pipeline seed and the generator seed.
    void set_seed(std::uint64_t value);

    /// Throws Error(config) on the first invalid field.
    void validate() const;
};

/// Overlays `j` onto `config`; unknown keys throw Error(config).
void apply_json(PipelineConfig& config, const nlohmann::json& j);

/// Defaults overlaid with the file's contents (when given) and validated.
PipelineConfig load_config(const std::optional<std::filesystem::path>& path);

nlohmann::json to_json(const PipelineConfig& config);

/// Generator for the post-shift phase of the drill.
txgen::GeneratorConfig shifted_generator(const txgen::GeneratorConfig& base, const DemoConfig& demo);

}  // namespace aml::pipeline
