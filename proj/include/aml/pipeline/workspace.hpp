#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "aml/eventlog/event_log.hpp"
#include "aml/lifecycle/registry.hpp"
#include "aml/pipeline/config.hpp"
#include "aml/storage/blob_store.hpp"
#include "aml/storage/table_store.hpp"

namespace aml::pipeline {

/// Stores rooted at the data directory, opened on first use:
///   log/        event log
///   blobs/      raw batches ("raw") and model parameters ("models")
///   tables/     transactions, alerts, features, metrics
///   registry/   model registry journal
///   stream/     alert and dead-letter sinks, processor state
///   train/      schema, training summary, metrics CSV
class Workspace {
public:
    explicit Workspace(const PipelineConfig& config);
    ~Workspace();

    const PipelineConfig& config() const noexcept { return config_; }

    eventlog::EventLog& log();
    storage::BlobStore& blobs();
    storage::TableStore& tables();
    lifecycle::ModelRegistry& registry();

    std::filesystem::path stream_dir() const { return config_.data_dir / "stream"; }
    std::filesystem::path train_dir() const { return config_.data_dir / "train"; }
    bool has_log() const { return std::filesystem::exists(config_.data_dir / "log"); }

private:
    PipelineConfig config_;
    std::unique_ptr<eventlog::EventLog> log_;
    std::unique_ptr<storage::BlobStore> blobs_;
    std::unique_ptr<storage::TableStore> tables_;
    std::unique_ptr<lifecycle::ModelRegistry> registry_;
};

storage::Row transaction_row(const txgen::Transaction& t);
txgen::Transaction transaction_from_row(const storage::Row& row);

/// Transactions from the transactions table when it has rows, otherwise
/// from the configured dataset file. Throws Error(missing_prerequisite)
/// naming `generate` when neither exists.
std::vector<txgen::Transaction> load_transactions(Workspace& workspace);

}  // namespace aml::pipeline
