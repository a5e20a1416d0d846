#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "aml/featstore/dataset.hpp"
#include "aml/lifecycle/drift.hpp"
#include "aml/pipeline/workspace.hpp"
#include "aml/streamproc/processor.hpp"

namespace aml::pipeline {

struct GenerateResult {
    std::filesystem::path path;
    std::uint64_t count = 0;
    std::uint64_t laundering = 0;
};

/// Writes the generated dataset (JSON-lines, or CSV for a .csv path).
GenerateResult cmd_generate(const PipelineConfig& config, std::optional<std::uint64_t> count,
                            std::optional<std::filesystem::path> out, std::ostream& transcript);

struct IngestResult {
    std::uint64_t published = 0;
    std::map<int, std::uint64_t> per_partition;
    std::vector<storage::BlobKey> archived;
    std::uint64_t first_tick = 0;
    std::uint64_t last_tick = 0;
};

/// Parses the whole file first (a bad line aborts before anything is
/// published), then publishes keyed by sender account, archives the raw
/// records per date partition and upserts the transactions table.
IngestResult cmd_ingest(const PipelineConfig& config, const std::filesystem::path& dataset, std::ostream& transcript);
IngestResult ingest_transactions(Workspace& workspace, std::span<const txgen::Transaction> transactions);

streamproc::StreamSummary cmd_stream(const PipelineConfig& config, std::optional<std::uint64_t> max_batches,
                                     std::ostream& transcript);
streamproc::StreamSummary run_stream(Workspace& workspace, std::optional<std::uint64_t> max_batches = std::nullopt);

struct TrainedKind {
    models::TrainedModel model;
    models::EvalMetrics validation;
    models::EvalMetrics test;
};

struct TrainingRun {
    featstore::EncodingSchema schema;
    featstore::SplitSizes sizes;
    std::size_t oversampled_rows = 0;
    lifecycle::ReferenceProfile profile;  // training split
    std::vector<TrainedKind> models;
};

/// schema -> encode -> split -> oversample -> train each kind -> evaluate.
/// Split, oversampling and forest seeds derive from `seed`.
TrainingRun train_models(std::span<const txgen::Transaction> transactions, const TrainingConfig& training,
                         std::uint64_t seed, std::span<const models::ModelKind> kinds);

struct TrainResult {
    TrainingRun run;
    std::vector<int> versions;  // same order as run.models
    int active_version = 0;
};

/// Trains all three kinds, registers them, activates the best by validation
/// F1 (earliest on ties) and writes <data>/train/{schema.json,summary.json,
/// model_metrics.csv}.
TrainResult cmd_train(const PipelineConfig& config, std::ostream& transcript);
TrainResult train_and_register(Workspace& workspace, std::span<const txgen::Transaction> transactions,
                               std::ostream& transcript);

/// File names written by cmd_report, in writing order.
const std::vector<std::string>& report_files();

struct ReportResult {
    std::vector<std::filesystem::path> files;
};

ReportResult cmd_report(const PipelineConfig& config, std::ostream& transcript);
ReportResult write_report(Workspace& workspace, std::ostream& transcript);

struct DemoResult {
    std::vector<lifecycle::DriftReport> reports;
    std::vector<lifecycle::RetrainResult> retrains;
    int initial_version = 0;
    int final_version = 0;
    bool single_active_held = true;
};

/// Scripted drill in an empty data directory: baseline phase, training,
/// streaming, a second phase (shifted unless `inject_shift` is false),
/// windowed drift checks with guarded retraining, and the report bundle.
DemoResult cmd_demo(const PipelineConfig& config, bool inject_shift, std::ostream& transcript);

}  // namespace aml::pipeline
