#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "aml/common/files.hpp"
#include "aml/featstore/schema.hpp"
#include "aml/models/metrics.hpp"
#include "aml/models/model.hpp"
#include "aml/storage/blob_store.hpp"

namespace aml::lifecycle {

using txgen::kFeatureCount;
using txgen::Transaction;

/// Category frequencies per feature, each block summing to 1.
using ReferenceProfile = std::array<std::map<std::string, double>, kFeatureCount>;

/// Throws Error(empty_input) for no rows.
ReferenceProfile build_profile(std::span<const Transaction> transactions);
nlohmann::json to_json(const ReferenceProfile& profile);
ReferenceProfile profile_from_json(const nlohmann::json& j);

enum class ModelStatus { registered, active, retired };
std::string_view status_name(ModelStatus status) noexcept;

struct ModelRecord {
    int version = 0;
    models::ModelKind kind = models::ModelKind::logistic_regression;
    std::uint64_t created_tick = 0;
    models::EvalMetrics metrics;  // validation split
    std::optional<models::EvalMetrics> test_metrics;
    std::uint64_t schema_hash = 0;
    featstore::EncodingSchema schema;
    ReferenceProfile reference_profile;
    storage::BlobKey blob;
    std::uint64_t train_seed = 0;
    ModelStatus status = ModelStatus::registered;
};

struct RegistryEvent {
    std::string event;  // register | activate | retire | retrain_failed
    int version = 0;
    std::uint64_t tick = 0;
    nlohmann::json payload = nlohmann::json::object();
};

struct Registration {
    const models::TrainedModel& model;
    const featstore::EncodingSchema& schema;
    models::EvalMetrics validation;
    std::optional<models::EvalMetrics> test;
    ReferenceProfile profile;
    std::uint64_t tick = 0;
    std::string date_partition = "2023-01-01";
};

/// Versioned model registry persisted as an append-only event journal at
/// <dir>/journal.jsonl; state is the fold of the journal. Parameter blobs
/// live in the blob store under namespace "models". Mutations are
/// serialized; readers get immutable snapshots without locking.
class ModelRegistry {
public:
    ModelRegistry(std::filesystem::path dir, storage::BlobStore& blobs);

    /// Stores the blob, journals the record, returns the new version.
    /// Throws Error(invalid_input) when the model carries no schema hash or
    /// the hash disagrees with `schema`.
    int register_model(const Registration& registration);

    /// Makes `version` active and retires the previous active version.
    /// `payload` is journaled with the activate event. Throws
    /// Error(not_found) for an unknown version.
    void activate(int version, std::uint64_t tick, nlohmann::json payload = nlohmann::json::object());

    void record_failure(const std::string& error, std::uint64_t tick, nlohmann::json payload = nlohmann::json::object());

    std::vector<ModelRecord> list() const;
    std::optional<ModelRecord> find(int version) const;
    ModelRecord get(int version) const;  // Error(not_found) when absent
    std::optional<ModelRecord> active() const;
    std::vector<RegistryEvent> events() const;

    models::TrainedModel load_model(int version) const;

    const std::filesystem::path& journal_path() const noexcept { return journal_path_; }

private:
    struct State {
        std::vector<ModelRecord> records;  // index = version - 1
        std::vector<RegistryEvent> events;
        int active = 0;
    };

    static void apply(State& state, const RegistryEvent& event);
    void append(State& next, RegistryEvent event);
    std::shared_ptr<const State> snapshot() const;

    std::filesystem::path dir_;
    std::filesystem::path journal_path_;
    storage::BlobStore& blobs_;
    std::mutex writer_;
    AppendFile journal_;
    std::shared_ptr<const State> state_;
};

}  // namespace aml::lifecycle
